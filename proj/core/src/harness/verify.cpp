/// @file verify.cpp
/// @brief Operator convergence study and the quick verification battery.
#include "slipflow/harness/verify.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "slipflow/elliptic.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"
#include "slipflow/solver.hpp"

namespace slipflow::harness {

namespace {

using std::numbers::pi;
using Fn = std::function<double(double, double, double)>;
using Point = std::array<double, 3>;

double eval(const Fn& f, const Point& x) { return f(x[0], x[1], x[2]); }

// Central differences of the analytic fields; their error sits many orders
// below the discretization error of the grids used here.
double d1(const Fn& f, int axis, Point x) {
  constexpr double e = 1e-5;
  Point a = x, b = x;
  a[axis] += e;
  b[axis] -= e;
  return (eval(f, a) - eval(f, b)) / (2 * e);
}

double d2(const Fn& f, int axis, Point x) {
  constexpr double e = 1e-4;
  Point a = x, b = x;
  a[axis] += e;
  b[axis] -= e;
  return (eval(f, a) - 2 * eval(f, x) + eval(f, b)) / (e * e);
}

// Slip-compatible: the normal component vanishes on its walls and the
// tangential components have zero normal derivative there.
const std::array<Fn, 3>& test_velocity() {
  static const std::array<Fn, 3> u = {
      [](double x, double y, double z) { return std::sin(pi * x) * std::cos(pi * y) * std::cos(2 * pi * z); },
      [](double x, double y, double z) { return std::cos(2 * pi * x) * std::sin(pi * y) * std::cos(pi * z); },
      [](double x, double y, double z) { return std::cos(pi * x) * std::cos(2 * pi * y) * std::sin(pi * z); },
  };
  return u;
}

double test_scalar(double x, double y, double z) {
  return std::cos(pi * x) * std::cos(2 * pi * y) * std::cos(pi * z);
}

double test_density(double x, double y, double z) {
  return 1.0 + 0.3 * std::cos(pi * x) * std::cos(pi * y) * std::cos(pi * z);
}

Point cell_point(const GridSpec& g, int i, int j, int k) {
  return {g.center(0, i), g.center(1, j), g.center(2, k)};
}

Point face_point(const GridSpec& g, int a, int i, int j, int k) {
  Point p = cell_point(g, i, j, k);
  p[a] = g.node(a, a == 0 ? i : a == 1 ? j : k);
  return p;
}

Point edge_point(const GridSpec& g, int a, int i, int j, int k) {
  const std::array<int, 3> idx{i, j, k};
  Point p{};
  for (int d = 0; d < 3; ++d) p[d] = d == a ? g.center(d, idx[d]) : g.node(d, idx[d]);
  return p;
}

VectorField sample_faces(const GridSpec& g, const std::array<Fn, 3>& u) {
  VectorField f(g);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a, true), [&](int i, int j, int k, std::size_t q) {
      f.data(a)[q] = eval(u[a], face_point(g, a, i, j, k));
    });
  }
  fill_vector_ghosts(f);
  return f;
}

ScalarField sample_cells(const GridSpec& g, const Fn& p) {
  ScalarField f(g);
  for_each_index(g, cell_box(g), [&](int i, int j, int k, std::size_t q) {
    f[q] = eval(p, cell_point(g, i, j, k));
  });
  fill_scalar_ghosts(f);
  return f;
}

class Rms {
 public:
  void add(double e) {
    s_.add(e * e);
    ++n_;
  }
  double value() const { return n_ ? std::sqrt(s_.value() / n_) : 0.0; }

 private:
  CompensatedSum s_;
  std::size_t n_ = 0;
};

double div_exact(const Point& x) {
  const auto& u = test_velocity();
  return d1(u[0], 0, x) + d1(u[1], 1, x) + d1(u[2], 2, x);
}

// Errors of every stencil on one grid, in report order.
std::vector<double> stencil_errors(int n, double* identity_residual) {
  const GridSpec g = build_grid({1, 1, 1}, {n, n, n}, 2);
  const auto& uf = test_velocity();
  const VectorField u = sample_faces(g, uf);
  std::vector<double> err;

  {  // divergence
    const ScalarField d = divergence(u);
    Rms r;
    for_each_index(g, cell_box(g), [&](int i, int j, int k, std::size_t q) {
      r.add(d[q] - div_exact(cell_point(g, i, j, k)));
    });
    err.push_back(r.value());
  }
  {  // gradient
    const VectorField gp = gradient(sample_cells(g, test_scalar));
    Rms r;
    for (int a = 0; a < 3; ++a) {
      for_each_index(g, face_box(g, a, true), [&](int i, int j, int k, std::size_t q) {
        r.add(gp.data(a)[q] - d1(test_scalar, a, face_point(g, a, i, j, k)));
      });
    }
    err.push_back(r.value());
  }
  {  // curl
    const EdgeField w = curl(u);
    Rms r;
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      for_each_index(g, edge_box(g, a), [&](int i, int j, int k, std::size_t q) {
        const Point x = edge_point(g, a, i, j, k);
        r.add(w.data(a)[q] - (d1(uf[c], b, x) - d1(uf[b], c, x)));
      });
    }
    err.push_back(r.value());
  }
  // Viscous operator with mu = 1, lambda = 0.5, the identity and the 7-point oracle.
  constexpr double mu = 1.0, lambda = 0.5;
  const VectorField visc = laplacian_vector(u, mu, lambda);
  const VectorField lap = laplacian_vector(u, 1.0, -1.0);  // grad div - curl curl
  {
    Rms r, ri;
    CompensatedSum diff2, ref2;
    const auto s = g.strides();
    for (int a = 0; a < 3; ++a) {
      for_each_index(g, face_box(g, a, false), [&](int i, int j, int k, std::size_t q) {
        const Point x = face_point(g, a, i, j, k);
        double lap_exact = 0.0, graddiv = 0.0;
        for (int b = 0; b < 3; ++b) lap_exact += d2(uf[a], b, x);
        graddiv = d1([](double x0, double y0, double z0) { return div_exact({x0, y0, z0}); }, a, x);
        r.add(visc.data(a)[q] - (mu * lap_exact + (mu + lambda) * graddiv));
        ri.add(lap.data(a)[q] - lap_exact);
        const double* ua = u.data(a);
        double seven = 0.0;
        for (int b = 0; b < 3; ++b) {
          seven += (ua[q + s[b]] - 2 * ua[q] + ua[q - s[b]]) / (g.spacing[b] * g.spacing[b]);
        }
        diff2.add((lap.data(a)[q] - seven) * (lap.data(a)[q] - seven));
        ref2.add(seven * seven);
      });
    }
    err.push_back(r.value());
    err.push_back(ri.value());
    if (identity_residual) *identity_residual = std::sqrt(diff2.value() / ref2.value());
  }
  {  // MUSCL advection of a smooth density
    const ScalarField rho = sample_cells(g, test_density);
    const ScalarField adv = advect_scalar(rho, u);
    Rms r;
    for_each_index(g, cell_box(g), [&](int i, int j, int k, std::size_t q) {
      const Point x = cell_point(g, i, j, k);
      double exact = 0.0;
      for (int a = 0; a < 3; ++a) {
        exact -= d1([&, a](double x0, double y0, double z0) {
                      return test_density(x0, y0, z0) * uf[a](x0, y0, z0);
                    },
                    a, x);
      }
      r.add(adv[q] - exact);
    });
    err.push_back(r.value());
  }
  return err;
}

}  // namespace

std::vector<StencilReport> stencil_convergence(const std::vector<int>& cells) {
  if (cells.size() < 2) throw ConfigError("verify", "at least two resolutions required");
  static const char* names[] = {"divergence", "gradient", "curl", "viscous_operator",
                                "vector_identity", "advection"};
  std::vector<std::vector<double>> errs;
  double identity_residual = 0.0;
  for (int n : cells) errs.push_back(stencil_errors(n, &identity_residual));
  std::vector<StencilReport> out;
  const std::size_t last = errs.size() - 1;
  for (std::size_t s = 0; s < errs[0].size(); ++s) {
    StencilReport rep;
    rep.name = names[s];
    rep.observed_order = observed_order(errs[last - 1][s], errs[last][s],
                                        static_cast<double>(cells[last]) / cells[last - 1]);
    rep.residual = s == 4 ? identity_residual : errs[last][s];
    out.push_back(rep);
  }
  return out;
}

std::vector<Assertion> verify_suite(std::uint64_t seed, std::ostream* log) {
  std::vector<Assertion> out;
  const auto check = [&](std::string name, bool ok, double value, double threshold,
                         std::string detail = {}) {
    if (log != nullptr) {
      *log << fmt::format("{:<34} {:<4} value={:<12.4g} threshold={:.4g}{}\n", name,
                          ok ? "PASS" : "FAIL", value, threshold,
                          detail.empty() ? "" : "  (" + detail + ")");
    }
    out.push_back({std::move(name), ok, value, threshold, std::move(detail)});
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  for (const StencilReport& r : stencil_convergence()) {
    check("order_" + r.name, r.observed_order >= 1.5, r.observed_order, 1.5);
    if (r.name == "vector_identity") check("identity_vs_7point", r.residual <= 1e-10, r.residual, 1e-10);
  }

  // Affine fields, with every padded value set analytically.
  {
    const GridSpec g = build_grid({1, 1, 1}, {8, 8, 8}, 2);
    VectorField u(g), v(g);
    ScalarField p(g);
    for (int a = 0; a < 3; ++a) {
      IndexBox all{{-2, -2, -2}, {10, 10, 10}};
      for_each_index(g, all, [&](int i, int j, int k, std::size_t q) {
        const Point x = face_point(g, a, i, j, k);
        u.data(a)[q] = x[a];
        v.data(a)[q] = a == 0 ? -x[1] : a == 1 ? x[0] : 0.0;
        if (a == 0) p[q] = g.center(0, i);
      });
    }
    u.set_ghosts_filled(true);
    v.set_ghosts_filled(true);
    p.set_ghosts_filled(true);
    const ScalarField d = divergence(u);
    const EdgeField w = curl(v);
    const VectorField gp = gradient(p);
    double ed = 0.0, ec = 0.0, eg = 0.0;
    for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { ed = std::max(ed, std::abs(d[q] - 3.0)); });
    for (int a = 0; a < 3; ++a) {
      for_each_index(g, edge_box(g, a), [&](int, int, int, std::size_t q) {
        ec = std::max(ec, std::abs(w.data(a)[q] - (a == 2 ? 2.0 : 0.0)));
      });
      for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) {
        eg = std::max(eg, std::abs(gp.data(a)[q] - (a == 0 ? 1.0 : 0.0)));
      });
    }
    check("linear_exact_divergence", ed <= 1e-12, ed, 1e-12);
    check("linear_exact_curl", ec <= 1e-12, ec, 1e-12);
    check("linear_exact_gradient", eg <= 1e-12, eg, 1e-12);
  }

  // Summation by parts and div(curl) = 0 on random slip fields.
  {
    const GridSpec g = build_grid({1, 1, 1}, {8, 8, 8}, 2);
    double worst_sbp = 0.0, worst_dc = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      ScalarField p(g);
      VectorField u(g);
      for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { p[q] = U(rng); });
      for (int a = 0; a < 3; ++a) {
        for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) { u.data(a)[q] = U(rng); });
      }
      fill_scalar_ghosts(p);
      fill_vector_ghosts(u);
      const VectorField gp = gradient(p);
      const ScalarField du = divergence(u);
      const double lhs = inner(gp, u) + inner(p, du);
      const double scale = std::sqrt(inner(gp, gp) * inner(u, u)) + std::sqrt(inner(p, p) * inner(du, du));
      worst_sbp = std::max(worst_sbp, std::abs(lhs) / scale);

      VectorField cc = curl_of_edges(curl(u));
      fill_vector_ghosts(cc);
      const ScalarField dcc = divergence(cc);
      const double m = std::sqrt(inner(cc, cc));
      worst_dc = std::max(worst_dc, lp_norm(dcc, INFINITY) / std::max(m, 1e-300) * g.spacing[0]);
    }
    check("summation_by_parts", worst_sbp <= 1e-12, worst_sbp, 1e-12);
    check("div_of_curl_zero", worst_dc <= 1e-12, worst_dc, 1e-12, "relative to |curl curl u| / h");
  }

  // Relative entropy against adaptive quadrature of its defining integral.
  {
    EosParams eos;
    eos.gamma = 1.4;
    double worst = 0.0;
    std::uniform_real_distribution<double> R(0.05, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
      const double rho = R(rng);
      const double pbar = eos.pressure(eos.rho_bar);
      const auto f = [&](double s) { return (eos.pressure(s) - pbar) / (s * s); };
      const double quad =
          rho * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, eos.rho_bar, rho, 15, 1e-14);
      worst = std::max(worst, std::abs(relative_entropy_G(rho, eos) - quad) / std::max(1.0, std::abs(quad)));
    }
    check("relative_entropy_quadrature", worst <= 1e-10, worst, 1e-10, "gamma = 1.4");
  }

  // Equilibrium is an exact steady state; the mass RHS integrates to zero.
  {
    const GridSpec g = build_grid({1, 1, 1}, {8, 8, 8}, 2);
    EosParams eos;
    PresetParams pp;
    pp.preset = Preset::uniform;
    const FlowState eq = make_initial_state(pp, g, eos).state;
    const RhsEval r = compute_rhs(eq, eos, 1e-10);
    double m = lp_norm(r.drho, INFINITY);
    for (int a = 0; a < 3; ++a) {
      for (double v : r.dmom.component(a)) m = std::max(m, std::abs(v));
    }
    check("equilibrium_rhs_zero", m == 0.0, m, 0.0);

    pp.preset = Preset::large_amplitude;
    pp.amplitude = 0.4;
    const FlowState s = make_initial_state(pp, g, eos).state;
    const RhsEval rs = compute_rhs(s, eos, 1e-10);
    const double total = integrate(rs.drho);
    const double scale = g.domain_volume() * lp_norm(rs.drho, INFINITY);
    check("mass_rhs_integral", std::abs(total) <= 1e-13 * scale, std::abs(total) / scale, 1e-13);
  }

  // Analytic Poincare ratio, probes and a small Stokes solve.
  {
    const GridSpec g = build_grid({1, 1, 1}, {32, 32, 32}, 2);
    VectorField f(g);
    for_each_index(g, face_box(g, 0), [&](int i, int, int, std::size_t q) {
      f.data(0)[q] = std::sin(pi * g.node(0, i));
    });
    fill_vector_ghosts(f);
    const double rel = std::abs(probe_ratio(ProbeKind::poincare, f).value_or(NAN) * pi - 1.0);
    check("poincare_sin_ratio", rel <= 0.01, rel, 0.01, "ratio against 1/pi at N=32");
  }
  for (ProbeKind kind : {ProbeKind::poincare, ProbeKind::divcurl}) {
    const ProbeReport a = inequality_probe(kind, 10, build_grid({1, 1, 1}, {16, 16, 16}, 2), seed);
    const ProbeReport b = inequality_probe(kind, 10, build_grid({1, 1, 1}, {32, 32, 32}, 2), seed);
    const double drift = std::abs(b.max_ratio - a.max_ratio) / a.max_ratio;
    check(kind == ProbeKind::poincare ? "poincare_probe_drift" : "divcurl_probe_drift",
          std::isfinite(drift) && drift <= 0.15, drift, 0.15);
  }
  {
    const BogovskiiProbe b = bogovskii_probe(build_grid({1, 1, 1}, {8, 8, 8}, 2), 10, seed);
    check("bogovskii_divergence", b.max_divergence_residual <= 1e-8, b.max_divergence_residual, 1e-8);
    check("bogovskii_walls", b.max_wall_value == 0.0, b.max_wall_value, 0.0);
  }
  return out;
}

}  // namespace slipflow::harness
