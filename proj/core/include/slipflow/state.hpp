#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "slipflow/eos.hpp"
#include "slipflow/grid.hpp"

namespace slipflow {

/// Conservative state (rho, m = rho u) at time t. Momentum lives on faces.
struct FlowState {
  double t = 0.0;
  std::int64_t step = 0;
  ScalarField rho;
  VectorField mom;

  const GridSpec& grid() const { return rho.grid(); }
  bool operator==(const FlowState& o) const {
    return t == o.t && step == o.step && rho == o.rho && mom == o.mom;
  }
};

/// Zero-normal-gradient reflection of a cell-centred field.
/// Throws NumericalBlowup on non-finite interior values.
void fill_scalar_ghosts(ScalarField& f);

/// Flat-wall slip conditions on a face field: wall-normal components are set
/// to exactly 0 and reflected antisymmetrically, tangential components are
/// reflected symmetrically (zero normal derivative, i.e. curl u x n = 0).
void fill_vector_ghosts(VectorField& u);

/// Ghost fill of density and momentum. Idempotent.
void fill_ghosts(FlowState& state);
FlowState with_ghosts(FlowState state);

/// Face density rho_f = (rho_L + rho_R)/2 for component `axis` at flat index q.
inline double face_density(const double* rho, std::ptrdiff_t stride, std::size_t q) {
  return 0.5 * (rho[q] + rho[q - stride]);
}

/// u = m / max(rho_f, floor) on every wall and interior face; ghosts filled.
void reconstruct_velocity_into(const FlowState& state, double floor, VectorField& u);
VectorField reconstruct_velocity(const FlowState& state, double floor);

enum class Preset { uniform, smooth_perturbation, large_amplitude, positive_floor, vacuum_point };

Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset p);

struct PresetParams {
  Preset preset = Preset::smooth_perturbation;
  /// Perturbation amplitude epsilon (density and velocity for the smooth presets,
  /// velocity only for positive-floor and vacuum-point).
  double amplitude = 0.05;
  /// Target minimum initial density for positive-floor.
  double rho_star = 0.5;
  /// Radius of the exact-vacuum ball and width of the smooth ramp (vacuum-point).
  double vacuum_radius = 0.15;
  double vacuum_ramp = 0.2;
};

struct InitialState {
  FlowState state;
  /// Discrete minimum of rho_0 over cells.
  double rho_min0 = 0.0;
  double rho_max0 = 0.0;
};

/// Builds the initial data; the discrete mean of rho_0 equals rho_bar.
/// Throws ConfigError for amplitudes that would make a non-vacuum preset
/// non-positive.
InitialState make_initial_state(const PresetParams& params, const GridSpec& grid,
                                const EosParams& eos);

/// Slip-compatible trigonometric eigenfield component on the unit box:
/// (sin pi x cos pi y cos pi z, -cos pi x sin pi y cos pi z, 0), scaled to the extents.
double slip_eigenfield(const GridSpec& grid, int axis, double x, double y, double z);

/// Mean of a cell field over interior cells.
double interior_mean(const ScalarField& f);

}  // namespace slipflow
