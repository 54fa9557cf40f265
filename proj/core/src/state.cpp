#include "slipflow/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"

namespace slipflow {
namespace {

// Interior index range of a field along `axis`: cells [0, N) or, for the
// normal axis of a face component, faces [0, N].
int interior_hi(const GridSpec& g, int axis, int face_axis) {
  return g.cells[axis] + (axis == face_axis ? 1 : 0);
}

/// Sequential per-axis reflection: pass d covers the padded range in axes < d
/// and the interior range in axes > d, so corner ghosts are consistent.
template <class Reflect>
void reflect_passes(const GridSpec& g, int face_axis, Reflect&& reflect) {
  const int gw = g.ghost;
  for (int d = 0; d < 3; ++d) {
    std::array<int, 3> lo{}, hi{};
    for (int e = 0; e < 3; ++e) {
      if (e < d) {
        lo[e] = -gw;
        hi[e] = g.cells[e] + gw;
      } else {
        lo[e] = 0;
        hi[e] = interior_hi(g, e, face_axis);
      }
    }
    const int e1 = (d + 1) % 3;
    const int e2 = (d + 2) % 3;
    for (int b = lo[e2]; b < hi[e2]; ++b) {
      for (int a = lo[e1]; a < hi[e1]; ++a) {
        std::array<int, 3> idx{};
        idx[e1] = a;
        idx[e2] = b;
        idx[d] = 0;
        reflect(d, g.index(idx[0], idx[1], idx[2]));
      }
    }
  }
}

void check_finite_interior(const GridSpec& g, const double* v, int face_axis, const char* what) {
  IndexBox box{{0, 0, 0}, g.cells};
  if (face_axis >= 0) box.hi[face_axis] += 1;
  bool ok = true;
  for_each_row(g, box, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) ok &= std::isfinite(v[q]);
  });
  if (!ok) throw NumericalBlowup(std::string("non-finite value in ") + what);
}

}  // namespace

void fill_scalar_ghosts(ScalarField& f) {
  const GridSpec& g = f.grid();
  double* v = f.data();
  check_finite_interior(g, v, -1, "scalar field");
  reflect_passes(g, -1, [&](int d, std::size_t q0) {
    // q0 addresses index 0 along axis d.
    const std::ptrdiff_t s = g.stride(d);
    const int n = g.cells[d];
    for (int m = 0; m < g.ghost; ++m) {
      v[q0 - (1 + m) * s] = v[q0 + m * s];
      v[q0 + (n + m) * s] = v[q0 + (n - 1 - m) * s];
    }
  });
  f.set_ghosts_filled(true);
}

void fill_vector_ghosts(VectorField& u) {
  const GridSpec& g = u.grid();
  for (int c = 0; c < 3; ++c) {
    double* v = u.data(c);
    check_finite_interior(g, v, c, "vector field");
    reflect_passes(g, c, [&](int d, std::size_t q0) {
      const std::ptrdiff_t s = g.stride(d);
      const int n = g.cells[d];
      if (d == c) {
        v[q0] = 0.0;
        v[q0 + n * s] = 0.0;
        for (int m = 1; m <= g.ghost; ++m) v[q0 - m * s] = -v[q0 + m * s];
        for (int m = 1; m < g.ghost; ++m) v[q0 + (n + m) * s] = -v[q0 + (n - m) * s];
      } else {
        for (int m = 0; m < g.ghost; ++m) {
          v[q0 - (1 + m) * s] = v[q0 + m * s];
          v[q0 + (n + m) * s] = v[q0 + (n - 1 - m) * s];
        }
      }
    });
  }
  u.set_ghosts_filled(true);
}

void fill_ghosts(FlowState& state) {
  fill_scalar_ghosts(state.rho);
  fill_vector_ghosts(state.mom);
}

FlowState with_ghosts(FlowState state) {
  fill_ghosts(state);
  return state;
}

void reconstruct_velocity_into(const FlowState& state, double floor, VectorField& u) {
  const GridSpec& g = state.grid();
  if (!state.rho.ghosts_filled() || !state.mom.ghosts_filled()) {
    throw ContractViolation("reconstruct_velocity: ghosts not filled");
  }
  if (!(u.grid() == g)) u = VectorField(g);
  const double* rho = state.rho.data();
  for (int c = 0; c < 3; ++c) {
    const double* m = state.mom.data(c);
    double* out = u.data(c);
    const std::ptrdiff_t s = g.stride(c);
    for_each_row(g, face_box(g, c, true), [&](std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q) {
        out[q] = m[q] / std::max(face_density(rho, s, q), floor);
      }
    });
  }
  fill_vector_ghosts(u);
}

VectorField reconstruct_velocity(const FlowState& state, double floor) {
  VectorField u(state.grid());
  reconstruct_velocity_into(state, floor, u);
  return u;
}

Preset parse_preset(std::string_view name) {
  if (name == "uniform") return Preset::uniform;
  if (name == "smooth-perturbation") return Preset::smooth_perturbation;
  if (name == "large-amplitude") return Preset::large_amplitude;
  if (name == "positive-floor") return Preset::positive_floor;
  if (name == "vacuum-point") return Preset::vacuum_point;
  throw ConfigError("initial.preset", "unknown preset '" + std::string(name) + "'");
}

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::uniform: return "uniform";
    case Preset::smooth_perturbation: return "smooth-perturbation";
    case Preset::large_amplitude: return "large-amplitude";
    case Preset::positive_floor: return "positive-floor";
    case Preset::vacuum_point: return "vacuum-point";
  }
  return "unknown";
}

double slip_eigenfield(const GridSpec& grid, int axis, double x, double y, double z) {
  using std::numbers::pi;
  const double kx = pi / grid.extent[0], ky = pi / grid.extent[1], kz = pi / grid.extent[2];
  switch (axis) {
    case 0: return std::sin(kx * x) * std::cos(ky * y) * std::cos(kz * z);
    case 1: return -std::cos(kx * x) * std::sin(ky * y) * std::cos(kz * z);
    default: return 0.0;
  }
}

double interior_mean(const ScalarField& f) {
  return interior_sum(f) / static_cast<double>(f.grid().interior_cells());
}

namespace {

double cosine_mode(const GridSpec& g, int i, int j, int k) {
  using std::numbers::pi;
  return std::cos(pi * g.center(0, i) / g.extent[0]) * std::cos(pi * g.center(1, j) / g.extent[1]) *
         std::cos(pi * g.center(2, k) / g.extent[2]);
}

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

void set_momentum_from_velocity(FlowState& s, double amplitude) {
  const GridSpec& g = s.grid();
  fill_scalar_ghosts(s.rho);
  const double* rho = s.rho.data();
  for (int c = 0; c < 3; ++c) {
    double* m = s.mom.data(c);
    const std::ptrdiff_t st = g.stride(c);
    for_each_index(g, face_box(g, c, true), [&](int i, int j, int k, std::size_t q) {
      std::array<double, 3> x{g.center(0, i), g.center(1, j), g.center(2, k)};
      x[c] = g.node(c, c == 0 ? i : (c == 1 ? j : k));
      m[q] = face_density(rho, st, q) * amplitude * slip_eigenfield(g, c, x[0], x[1], x[2]);
    });
  }
  fill_ghosts(s);
}

}  // namespace

InitialState make_initial_state(const PresetParams& params, const GridSpec& grid,
                                const EosParams& eos) {
  if (grid.ghost < 2) throw ConfigError("grid.ghost", "the flow state needs ghost width >= 2");
  if (!(params.amplitude >= 0.0) || !std::isfinite(params.amplitude)) {
    throw ConfigError("initial.amplitude", "amplitude must be a finite non-negative number");
  }
  InitialState out;
  FlowState& s = out.state;
  s.rho = ScalarField(grid, 0.0);
  s.mom = VectorField(grid, 0.0);
  const double rho_bar = eos.rho_bar;
  const IndexBox cells = cell_box(grid);

  switch (params.preset) {
    case Preset::uniform:
      for_each_index(grid, cells, [&](int, int, int, std::size_t q) { s.rho[q] = rho_bar; });
      fill_ghosts(s);
      break;
    case Preset::smooth_perturbation:
    case Preset::large_amplitude: {
      const double eps = params.amplitude;
      if (params.preset == Preset::large_amplitude && eps > 0.5) {
        throw ConfigError("initial.amplitude", "large-amplitude preset allows amplitude <= 0.5");
      }
      if (eps >= 1.0) {
        throw ConfigError("initial.amplitude", "amplitude >= 1 makes the initial density negative");
      }
      for_each_index(grid, cells, [&](int i, int j, int k, std::size_t q) {
        s.rho[q] = rho_bar * (1.0 + eps * cosine_mode(grid, i, j, k));
      });
      set_momentum_from_velocity(s, eps);
      break;
    }
    case Preset::positive_floor: {
      if (!(params.rho_star > 0.0 && params.rho_star < rho_bar)) {
        throw ConfigError("initial.rho_star", "positive-floor needs 0 < rho_star < rho_bar");
      }
      const double depth = rho_bar - params.rho_star;
      for_each_index(grid, cells, [&](int i, int j, int k, std::size_t q) {
        s.rho[q] = rho_bar + depth * cosine_mode(grid, i, j, k);
      });
      set_momentum_from_velocity(s, params.amplitude);
      break;
    }
    case Preset::vacuum_point: {
      if (!(params.vacuum_radius > 0.0) || !(params.vacuum_ramp > 0.0)) {
        throw ConfigError("initial.vacuum_radius", "vacuum radius and ramp must be positive");
      }
      const double r0 = params.vacuum_radius;
      const double w = params.vacuum_ramp;
      double shape_sum = 0.0;
      for_each_index(grid, cells, [&](int i, int j, int k, std::size_t q) {
        const double dx = grid.center(0, i) - 0.5 * grid.extent[0];
        const double dy = grid.center(1, j) - 0.5 * grid.extent[1];
        const double dz = grid.center(2, k) - 0.5 * grid.extent[2];
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        s.rho[q] = smooth_step((r - r0) / w);
        shape_sum += s.rho[q];
      });
      if (!(shape_sum > 0.0)) throw ConfigError("initial.vacuum_radius", "vacuum ball fills the box");
      const double kappa = rho_bar * static_cast<double>(grid.interior_cells()) / shape_sum;
      for_each_index(grid, cells, [&](int, int, int, std::size_t q) { s.rho[q] *= kappa; });
      set_momentum_from_velocity(s, params.amplitude);
      break;
    }
  }

  // Non-vacuum presets: remove the roundoff drift of the discrete mean.
  if (params.preset != Preset::vacuum_point) {
    const double shift = rho_bar - interior_mean(s.rho);
    for_each_index(grid, cells, [&](int, int, int, std::size_t q) { s.rho[q] += shift; });
    fill_scalar_ghosts(s.rho);
  }

  double lo = INFINITY, hi = -INFINITY;
  for_each_index(grid, cells, [&](int, int, int, std::size_t q) {
    lo = std::min(lo, s.rho[q]);
    hi = std::max(hi, s.rho[q]);
  });
  if (params.preset != Preset::vacuum_point && !(lo > 0.0)) {
    throw ConfigError("initial.amplitude", "initial density is not positive");
  }
  out.rho_min0 = lo;
  out.rho_max0 = hi;
  s.t = 0.0;
  s.step = 0;
  return out;
}

}  // namespace slipflow
