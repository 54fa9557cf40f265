#include "slipflow/operators.hpp"

#include <algorithm>
#include <cmath>

#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"
#include "stencil.hpp"

namespace slipflow {
namespace {

template <class Field>
void require_ghosts(const Field& f, const char* op) {
  if (!f.ghosts_filled()) throw ContractViolation(std::string(op) + ": ghosts not filled");
}

template <class Field>
void ensure_grid(Field& out, const GridSpec& g) {
  if (!(out.grid() == g)) out = Field(g);
}

}  // namespace

double observed_order(double coarse_error, double fine_error, double ratio) {
  if (!(coarse_error > 0.0) || !(fine_error > 0.0)) return INFINITY;
  return std::log(coarse_error / fine_error) / std::log(ratio);
}

void divergence_into(const VectorField& u, ScalarField& out) {
  require_ghosts(u, "divergence");
  ensure_grid(out, u.grid());
  detail::divergence_kernel(u.grid(), u.data(0), u.data(1), u.data(2), out.data());
  fill_scalar_ghosts(out);
}

ScalarField divergence(const VectorField& u) {
  ScalarField out(u.grid());
  divergence_into(u, out);
  return out;
}

void curl_into(const VectorField& u, EdgeField& out) {
  require_ghosts(u, "curl");
  ensure_grid(out, u.grid());
  detail::curl_kernel(u.grid(), u, out);
}

EdgeField curl(const VectorField& u) {
  EdgeField out(u.grid());
  curl_into(u, out);
  return out;
}

VectorField curl_of_edges(const EdgeField& w) {
  VectorField out(w.grid());
  const GridSpec& g = w.grid();
  const auto s = g.strides();
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const double* wb = w.data(b);
    const double* wc = w.data(c);
    double* o = out.data(a);
    const double ib = 1.0 / g.spacing[b], ic = 1.0 / g.spacing[c];
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        o[q] = (wc[q + s[b]] - wc[q]) * ib - (wb[q + s[c]] - wb[q]) * ic;
      }
    });
  }
  return out;
}

void gradient_into(const ScalarField& p, VectorField& out) {
  require_ghosts(p, "gradient");
  ensure_grid(out, p.grid());
  const GridSpec& g = p.grid();
  const double* v = p.data();
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double ih = 1.0 / g.spacing[a];
    double* o = out.data(a);
    for_each_row(g, face_box(g, a, true), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) o[q] = (v[q] - v[q - s]) * ih;
    });
  }
}

VectorField gradient(const ScalarField& p) {
  VectorField out(p.grid());
  gradient_into(p, out);
  return out;
}

VectorField laplacian_vector(const VectorField& u, double mu, double lambda) {
  const GridSpec& g = u.grid();
  const ScalarField d = divergence(u);
  const EdgeField w = curl(u);
  const VectorField cc = curl_of_edges(w);
  VectorField out(g);
  const double nu = 2.0 * mu + lambda;
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double ih = 1.0 / g.spacing[a];
    const double* dv = d.data();
    const double* c = cc.data(a);
    double* o = out.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) o[q] = nu * (dv[q] - dv[q - s]) * ih - mu * c[q];
    });
  }
  return out;
}

void mass_flux_into(const ScalarField& rho, const VectorField& u, VectorField& flux) {
  require_ghosts(rho, "mass_flux");
  require_ghosts(u, "mass_flux");
  ensure_grid(flux, rho.grid());
  detail::muscl_flux_kernel(rho.grid(), rho.data(), u, flux);
}

ScalarField advect_scalar(const ScalarField& rho, const VectorField& u) {
  VectorField flux(rho.grid());
  mass_flux_into(rho, u, flux);
  ScalarField out(rho.grid());
  detail::divergence_kernel(rho.grid(), flux.data(0), flux.data(1), flux.data(2), out.data());
  for (auto& v : out.values()) v = -v;
  fill_scalar_ghosts(out);
  return out;
}

VectorField convective_acceleration(const VectorField& u) {
  require_ghosts(u, "convective_acceleration");
  VectorField out(u.grid());
  detail::convective_kernel(u.grid(), u, out);
  return out;
}

MaterialAcceleration material_acceleration(const FlowState& prev, const FlowState& curr,
                                           double dt, double vacuum_floor) {
  if (!(dt > 0.0)) throw DomainError("material_acceleration: dt must be positive");
  const GridSpec& g = curr.grid();
  const VectorField up = reconstruct_velocity(prev, vacuum_floor);
  const VectorField uc = reconstruct_velocity(curr, vacuum_floor);
  MaterialAcceleration res{convective_acceleration(uc), 0};
  const double* rho = curr.rho.data();
  const double idt = 1.0 / dt;
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double* p = up.data(a);
    const double* c = uc.data(a);
    double* o = res.udot.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        if (face_density(rho, s, q) < vacuum_floor) {
          o[q] = 0.0;
          ++res.masked_faces;
        } else {
          o[q] += (c[q] - p[q]) * idt;
        }
      }
    });
  }
  fill_vector_ghosts(res.udot);
  return res;
}

ScalarField effective_viscous_flux(const FlowState& state, const EosParams& eos,
                                   double vacuum_floor) {
  const VectorField u = reconstruct_velocity(state, vacuum_floor);
  ScalarField f = divergence(u);
  const ScalarField p = eos_pressure(state.rho, eos);
  const double p_mean = interior_mean(p);
  const double nu = eos.nu_long();
  for_each_row(f.grid(), cell_box(f.grid()), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) f[q] = nu * f[q] - (p[q] - p_mean);
  });
  fill_scalar_ghosts(f);
  return f;
}

double momentum_residual(const FlowState& state, const VectorField& udot, const EosParams& eos,
                         double vacuum_floor) {
  const GridSpec& g = state.grid();
  const ScalarField f = effective_viscous_flux(state, eos, vacuum_floor);
  const VectorField u = reconstruct_velocity(state, vacuum_floor);
  const VectorField cc = curl_of_edges(curl(u));
  const VectorField gf = gradient(f);
  const double* rho = state.rho.data();
  CompensatedSum res2, acc2, grad2;
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double* ud = udot.data(a);
    const double* c = cc.data(a);
    const double* gr = gf.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double ra = face_density(rho, s, q) * ud[q];
        const double r = ra - gr[q] + eos.mu * c[q];
        res2.add(r * r);
        acc2.add(ra * ra);
        grad2.add(gr[q] * gr[q]);
      }
    });
  }
  const double denom = std::sqrt(acc2.value()) + std::sqrt(grad2.value());
  if (!(denom > 0.0)) return 0.0;
  return std::sqrt(res2.value()) / denom;
}

}  // namespace slipflow
