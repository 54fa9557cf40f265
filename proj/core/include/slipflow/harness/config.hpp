/// @file config.hpp
/// @brief Run configuration: a flat sectioned key-value document parsed into
/// validated structs, with a canonical echo and a hash for checkpoints.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slipflow/diagnostics.hpp"
#include "slipflow/eos.hpp"
#include "slipflow/grid.hpp"
#include "slipflow/solver.hpp"
#include "slipflow/state.hpp"

namespace slipflow::harness {

/// Settings used only by the experiment drivers (thresholds, resolution lists).
struct AnalysisConfig {
  double fit_r2 = 0.98;                  ///< R^2 threshold for the L^2 decay fits
  double linf_fit_r2 = 0.95;             ///< R^2 threshold for the L^inf fit
  double rate_agreement = 2.0;           ///< max pairwise ratio of the field rates
  double energy_balance_tol = 0.02;      ///< per-interval |dE + dI| / dI
  double mass_tol = 1e-12;
  double momentum_residual_tol = 0.05;
  double lower_bound_slack = 0.05;
  double vacuum_tol = 1e-10;
  double grad_rho_ratio = 0.5;           ///< late-half min of ||grad rho||_4 over its initial value
  double rho_hat = INFINITY;
  /// Optional second resolution for the theorem1 rates (0 disables it).
  int remeasure_cells = 0;
  double remeasure_t_end = 3.0;
  double remeasure_tol = 0.10;
  std::vector<int> convergence_cells{16, 32, 64};
  double convergence_t_end = 0.1;
  double convergence_balance_tol = 0.006;   ///< at the finest resolution
  double convergence_balance_factor = 3.0;
  double convergence_residual_factor = 2.0;
  std::vector<int> probe_cells{16, 32};
  int probe_trials = 50;
  double probe_drift = 0.15;
};

struct RunConfig {
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  std::array<int, 3> cells{32, 32, 32};
  int ghost = 2;
  EosParams eos;
  StepControl control;
  /// Velocity reconstruction floor, relative to rho_bar.
  double vacuum_floor = 1e-10;
  double stokes_tol = 1e-8;
  PresetParams initial;
  LyapunovWeights weights;
  std::filesystem::path output_dir = "out";
  std::int64_t sample_every = 20;
  std::int64_t checkpoint_every = 0;
  bool plots = false;
  std::uint64_t seed = 20240607;
  AnalysisConfig analysis;

  GridSpec grid() const;
  double absolute_floor() const { return vacuum_floor * eos.rho_bar; }
};

/// Parses a config document. Lines are `key = value`, `[section]`, blank, or
/// comments starting with '#' or ';'. A key outside any section must name a
/// key of exactly one section. Every field has a default; the result is
/// validated as a whole. Errors are ConfigError carrying `section.key`.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError for the first invalid field.
void validate(const RunConfig& cfg);

/// Canonical document listing every effective value; parse_config of the echo
/// reproduces the config.
std::string config_echo(const RunConfig& cfg);

/// FNV-1a hash of the settings that determine the trajectory (grid, physics,
/// step control except t_end and max_steps, floor, initial data, sampling).
std::uint64_t config_hash(const RunConfig& cfg);

/// All recognised keys as `section.key`.
std::vector<std::string> config_keys();

}  // namespace slipflow::harness
