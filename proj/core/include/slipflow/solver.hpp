/// @file solver.hpp
/// @brief Explicit SSP-RK3 integration of the isentropic compressible
/// Navier-Stokes system in conservative variables (rho, m) on the slip box.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "slipflow/eos.hpp"
#include "slipflow/grid.hpp"
#include "slipflow/state.hpp"

namespace slipflow {

struct StepControl {
  double cfl_advective = 0.4;
  double cfl_viscous = 0.2;
  double dt_min = 1e-12;
  double dt_max = 1.0;
  double t_end = 8.0;
  std::int64_t max_steps = std::numeric_limits<std::int64_t>::max();
};

/// Throws ConfigError unless 0 < cfl_advective <= 1, 0 < cfl_viscous <= 0.5,
/// 0 < dt_min <= dt_max, t_end >= 0, max_steps >= 0.
void validate(const StepControl& ctl);

struct RhsEval {
  ScalarField drho;
  VectorField dmom;
  /// (2mu + lambda)||div u||^2 + mu||curl u||^2 of the input state.
  double dissipation = 0.0;
  /// max |div u| over cells of the input state.
  double div_linf = 0.0;
};

/// Density clip: values in (-tol, 0) are zeroed, values <= -tol are fatal.
inline constexpr double kPositivityTolerance = 1e-13;

/// Stateful integrator holding the scratch fields for one grid.
class Solver {
 public:
  /// vacuum_floor is the absolute density used to guard u = m / rho.
  Solver(const GridSpec& grid, const EosParams& eos, double vacuum_floor);

  const EosParams& eos() const { return eos_; }
  double vacuum_floor() const { return floor_; }

  /// drho = -div(rho u), dmom = -div(rho u (x) u) - grad P + (2mu+lambda) grad div u
  /// - mu curl curl u on interior faces. Input ghosts must be filled.
  const RhsEval& evaluate(const FlowState& state);

  /// cfl_dt() for `state`, which must be the state last passed to evaluate()
  /// (the velocity reconstructed there is reused).
  double stable_dt(const FlowState& state, const StepControl& ctl) const;

  /// One SSP-RK3 step. `first_stage` must be evaluate(state) of this state.
  /// Ghosts are refilled after every stage.
  FlowState advance(const FlowState& state, double dt, const RhsEval& first_stage);

 private:
  const RhsEval& assemble(const FlowState& state, bool with_rates);
  void stage_update(const FlowState& base, const FlowState& stage, double w, const RhsEval& rhs,
                    double dt, FlowState& out) const;

  GridSpec grid_;
  EosParams eos_;
  double floor_;
  RhsEval rhs_;
  VectorField u_, flux_;
  ScalarField div_, p_;
  EdgeField omega_;
  FlowState s1_, s2_;
};

RhsEval compute_rhs(const FlowState& state, const EosParams& eos, double vacuum_floor);

/// min over cells of cfl_a h / (|u| + c) and over faces of
/// cfl_v h^2 max(rho_f, floor) / (2mu + lambda), clamped to [dt_min, dt_max].
/// Throws StiffnessError when the bound is below dt_min.
double cfl_dt(const FlowState& state, const EosParams& eos, const StepControl& ctl,
              double vacuum_floor);

FlowState step_ssprk3(const FlowState& state, const EosParams& eos, double dt,
                      double vacuum_floor);

/// Time integrals accumulated by integrate() with the trapezoid rule over steps.
struct RunningIntegrals {
  double dissipation = 0.0;  ///< int (2mu+lambda)||div u||^2 + mu||curl u||^2 dt
  double div_linf = 0.0;     ///< int ||div u||_inf dt
  bool operator==(const RunningIntegrals&) const = default;
};

/// What an observer sees at a sample point.
struct SampleContext {
  const FlowState& state;
  /// State one step earlier; null for the very first sample of a run.
  const FlowState* prev = nullptr;
  double dt_prev = 0.0;
  const RhsEval& rhs;
  RunningIntegrals integrals;
};

struct IntegrateOptions {
  StepControl control;
  std::int64_t sample_every = 20;
  std::int64_t checkpoint_every = 0;
  std::function<void(const SampleContext&)> on_sample;
  std::function<void(const FlowState&, const RunningIntegrals&)> on_checkpoint;
  /// Accumulators carried over from a checkpoint.
  RunningIntegrals initial_integrals;
  /// Emit a sample for the initial state (false when resuming).
  bool sample_initial = true;
};

struct IntegrateResult {
  FlowState final_state;
  RunningIntegrals integrals;
  std::int64_t steps_taken = 0;
};

/// Advances to control.t_end or control.max_steps (total step index).
/// Samples every `sample_every` steps and at the final state. Errors are
/// re-thrown with the simulation time appended.
IntegrateResult integrate(FlowState state, Solver& solver, const IntegrateOptions& opts);

}  // namespace slipflow
