/// @file experiments.hpp
/// @brief Preset experiments: simulation driver with CSV streaming and
/// checkpoint/resume, the five named experiments and their reports.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slipflow/diagnostics.hpp"
#include "slipflow/harness/config.hpp"
#include "slipflow/state.hpp"

namespace slipflow::harness {

enum class Experiment { theorem1, theorem1_positive, theorem2_vacuum, convergence, probes };

/// Accepts theorem1, theorem1-positive, theorem2-vacuum, convergence, probes.
Experiment parse_experiment(std::string_view name);
std::string_view experiment_name(Experiment e);

struct Assertion {
  std::string name;
  bool passed = false;
  double value = NAN;
  double threshold = NAN;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<Assertion> assertions;
  /// Scalar results by name (rates, maxima, ratios); also present in the JSON.
  std::map<std::string, double> metrics;
  /// Records of the primary run (empty for probes).
  std::vector<DiagnosticsRecord> records;
  std::string summary_json;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
  std::vector<std::filesystem::path> plots;

  bool passed() const;
  std::vector<std::string> failures() const;
  /// metrics.at(name) with a readable error.
  double metric(const std::string& name) const;
};

struct SimulationOptions {
  /// Diagnostics CSV; rows are flushed as they are produced into a
  /// `.partial` sibling that is renamed on completion.
  std::optional<std::filesystem::path> csv;
  /// Written every cfg.checkpoint_every steps (atomically replaced).
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> resume;
  bool ignore_config_hash = false;
  /// Progress lines, roughly every tenth of the run.
  std::ostream* log = nullptr;
};

struct SimulationResult {
  /// Every record of the run, including those restored from the CSV on resume.
  std::vector<DiagnosticsRecord> records;
  FlowState final_state;
  RunningIntegrals integrals;
  double rho_min0 = 0.0;
  double rho_max0 = 0.0;
  double rho_mean0 = 0.0;
  std::int64_t steps_taken = 0;
  double wall_seconds = 0.0;
};

/// Runs cfg from its initial preset (or from a checkpoint) to cfg.control.t_end.
/// On resume the checkpoint's grid and physics must match cfg, and its config
/// hash must match unless ignore_config_hash is set (CheckpointError).
SimulationResult simulate(const RunConfig& cfg, const SimulationOptions& opts = {});

struct RunOptions {
  std::optional<std::filesystem::path> resume;
  bool ignore_config_hash = false;
  /// Overrides cfg.plots when set.
  std::optional<bool> plots;
  std::ostream* log = nullptr;
};

/// Runs one experiment, writing into cfg.output_dir: the config echo
/// (`<name>.config.ini`), `<name>.csv`, `<name>.json` and optional SVG plots.
/// Solver errors propagate; assertion failures are reported, not thrown.
ExperimentReport run_experiment(Experiment e, const RunConfig& cfg, const RunOptions& opts = {});

struct BogovskiiProbe {
  int cells = 0;
  int trials = 0;
  double max_divergence_residual = 0.0;  ///< max ||div B - f|| / ||f||
  double max_wall_value = 0.0;           ///< max |B| over wall faces
  double max_ratio = 0.0;                ///< max ||grad B|| / ||f||
  int max_iterations = 0;
  bool all_converged = true;
};

/// Solves for B[f] with `trials` random smooth mean-zero f built from low
/// cosine modes.
BogovskiiProbe bogovskii_probe(const GridSpec& grid, int trials, std::uint64_t seed,
                               double tol = 1e-8);

/// Random mean-zero cell field sum c cos(k1 pi x) cos(k2 pi y) cos(k3 pi z),
/// 0 <= k <= 3 not all zero, c ~ U(-1, 1).
ScalarField random_mean_zero_field(const GridSpec& grid, std::uint64_t seed);

}  // namespace slipflow::harness
