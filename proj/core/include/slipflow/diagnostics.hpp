/// @file diagnostics.hpp
/// @brief Monitored norms, energies and Lyapunov functionals, decay-rate fits,
/// density-bound tracking and the functional-inequality probes.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slipflow/elliptic.hpp"
#include "slipflow/eos.hpp"
#include "slipflow/grid.hpp"
#include "slipflow/solver.hpp"
#include "slipflow/state.hpp"

namespace slipflow {

/// Midpoint L^p norm over interior cells; p in {1, 2, 3, 4, 6, inf}.
/// Throws DomainError for other p.
double lp_norm(const ScalarField& f, double p);

/// ||grad u||_2 of a face field with filled (slip) ghosts: diagonal entries at
/// cells, off-diagonal entries at edges with trapezoid weights.
double velocity_gradient_l2(const VectorField& u);

struct LyapunovWeights {
  double D1 = 20.0, D2 = 10.0, D3 = 20.0, D4 = 10.0, D5 = 20.0;
  bool operator==(const LyapunovWeights&) const = default;
};

/// Throws ConfigError unless every weight is positive and finite.
void validate(const LyapunovWeights& w);

enum RecordFlag : unsigned {
  kFlagNone = 0,
  kFlagUdotFromRhs = 1u << 0,       ///< first sample: u-dot from the RHS, not a time difference
  kFlagUdotMasked = 1u << 1,        ///< vacuum faces were masked in u-dot
  kFlagStokesUnconverged = 1u << 2,
  kFlagRhoHatExceeded = 1u << 3,    ///< max rho above the configured rho-hat
  kFlagPartial = 1u << 4,           ///< a sub-computation failed; see run log
};

std::string flags_to_string(unsigned flags);
/// Inverse of flags_to_string; throws DomainError on unknown names.
unsigned flags_from_string(const std::string& text);

struct DiagnosticsRecord {
  double t = 0.0;
  std::int64_t step = 0;
  double rho_l2 = 0.0;            ///< ||rho - rho0_mean||_2
  double rho_linf = 0.0;          ///< ||rho - rho0_mean||_inf
  double sqrt_rho_u_l2 = 0.0;
  double grad_u_l2 = 0.0;
  double div_u_l2 = 0.0;
  double curl_u_l2 = 0.0;
  double sqrt_rho_udot_l2 = 0.0;
  double G_integral = 0.0;
  double energy = 0.0;
  double F_l2sq = 0.0;            ///< int F^2 dx
  double F_linf = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double M1 = 0.0, M2 = 0.0, M3 = 0.0;
  double bogovskii_pairing = 0.0;
  double momentum_residual = 0.0;
  /// (Delta E + Delta int D dt) / Delta int D dt over the interval since the
  /// previous record; 0 on the first record.
  double energy_balance_residual = 0.0;
  double rho_mean = 0.0;
  double dissipation_rate = 0.0;
  double dissipation_integral = 0.0;
  double F_integral = 0.0;
  double div_u_linf = 0.0;
  double div_u_linf_integral = 0.0;
  double grad_rho_l4 = 0.0;
  double grad_udot_l2 = 0.0;
  double pressure_residual = 0.0;
  /// Wall integral of (u . grad n . u) F; zero on the flat-walled box.
  double m3_boundary_term = 0.0;
  /// 1/2 int ((2 mu + lambda)(div u)^2 + mu |curl u|^2) dx
  double viscous_energy = 0.0;
  /// int (P - P_bar) div u dx
  double pressure_work = 0.0;
  std::int64_t udot_masked_faces = 0;
  std::int64_t stokes_iterations = 0;
  unsigned flags = kFlagNone;
};

/// Fixed CSV header (no trailing newline).
const std::string& csv_header();
/// One CSV row, 17 significant digits (no trailing newline).
std::string csv_row(const DiagnosticsRecord& r);
/// Column values by header name; throws DomainError on unknown names.
double record_value(const DiagnosticsRecord& r, const std::string& column);
std::vector<std::string> csv_columns();
/// Inverse of csv_row; throws DomainError on a malformed row.
DiagnosticsRecord parse_csv_row(const std::string& line);
/// Reads a diagnostics CSV written with csv_header(); throws DomainError on a
/// missing file, a foreign header or a malformed row.
std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::filesystem::path& path);

struct SamplerConfig {
  EosParams eos;
  LyapunovWeights weights;
  double vacuum_floor = 1e-10;
  double rho_mean0 = 1.0;
  double stokes_tol = 1e-8;
  /// Upper density bound for the rho-hat monitor; infinity disables it.
  double rho_hat = INFINITY;
};

/// Builds records from consecutive states; owns the Stokes workspace and the
/// previous (E, int D) pair for the energy-balance residual.
class Sampler {
 public:
  Sampler(const GridSpec& grid, const SamplerConfig& cfg);

  /// `rhs` must be the RHS of `state`; it supplies u-dot when prev is null and
  /// the instantaneous dissipation rate.
  DiagnosticsRecord sample(const FlowState& state, const FlowState* prev, double dt,
                           const RhsEval& rhs, const RunningIntegrals& integrals);
  DiagnosticsRecord sample(const SampleContext& ctx) {
    return sample(ctx.state, ctx.prev, ctx.dt_prev, ctx.rhs, ctx.integrals);
  }

  /// Seeds the balance bookkeeping (used when resuming).
  void set_previous(double energy, double dissipation_integral);
  std::optional<std::pair<double, double>> previous() const { return prev_; }

  const SamplerConfig& config() const { return cfg_; }

 private:
  SamplerConfig cfg_;
  StokesSolver stokes_;
  std::optional<std::pair<double, double>> prev_;
};

/// Stand-alone form: computes the RHS itself.
DiagnosticsRecord sample(const FlowState& state, const FlowState* prev, double dt,
                         const EosParams& eos, const LyapunovWeights& weights,
                         double vacuum_floor = 1e-10);

/// Normalized L2 residual of
/// (P - Pbar)_t + u . grad(P - Pbar) + gamma P div u - (gamma - 1) mean(P div u) = 0
/// from a backward difference; 0 for 0/0.
double pressure_evolution_residual(const FlowState& prev, const FlowState& curr, double dt,
                                   const EosParams& eos, double vacuum_floor = 1e-10);

/// Cell-centred |grad rho| in L^4 (face differences averaged to cells).
double grad_rho_l4(const ScalarField& rho);

struct DecayFit {
  double t0 = 0.0, t1 = 0.0;
  double C = 0.0;
  double eta = 0.0;
  double r2 = 0.0;  ///< NaN for a constant series
  std::size_t samples = 0;
  std::size_t excluded = 0;  ///< points at or below the noise floor
  bool constant = false;
  bool accepted = false;  ///< r2 >= threshold and samples >= 10
};

/// Least-squares fit of log y = log C - eta t over t in [t0, t1]. Points with
/// y <= 1e3 eps max(y) are excluded and counted. Throws DomainError with fewer
/// than 10 usable samples or an all-zero series.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t0,
                   double t1, double r2_threshold = 0.98);

/// Window [t_first + 0.4 (t_last - t_first), t_last].
std::pair<double, double> default_fit_window(const std::vector<double>& t);

struct DensityBounds {
  double inf_min = 0.0;
  double sup_max = 0.0;
  /// Smallest ratio min rho(t) / (rho_min0 exp(-int_0^t ||div u||_inf)) over samples.
  double lower_bound_ratio = INFINITY;
  double final_div_linf_integral = 0.0;
  /// max over samples of min rho(t).
  double max_of_min = 0.0;
};

DensityBounds track_density_bounds(const std::vector<DiagnosticsRecord>& records,
                                   double rho_min0);

struct FunctionalCheck {
  std::string name;
  std::size_t intervals = 0;
  std::size_t holds = 0;          ///< intervals where the discrete inequality holds
  double fraction = 0.0;
  std::size_t decreasing = 0;     ///< intervals with M(k+1) < M(k)
  /// First sample index from which M stays > 0; -1 if never.
  std::int64_t positive_from = -1;
  bool positive_definite = false;  ///< M > 0 at every sample with nonzero perturbation
};

struct LyapunovReport {
  FunctionalCheck m1, m2, m3;
  /// Empirical equivalence constants: min and max of M1 / (||rho - rho0||^2 + ||sqrt(rho) u||^2).
  double m1_lower = 0.0, m1_upper = 0.0;
};

/// M1, M2 and M3 of one record rebuilt with the given weights.
std::array<double, 3> lyapunov_functionals(const DiagnosticsRecord& r, const LyapunovWeights& w);

/// Discrete forms over [t_k, t_k+1] with trapezoid averages, with the
/// functionals rebuilt from `weights`:
///   dM1/dt + M1/D1 + (||div u||^2 + ||curl u||^2)/D1 <= 0
///   dM2/dt + M2/D3 + ||sqrt(rho) u-dot||^2/D3 <= 0
///   dM3/dt + M3/D5 + mu ||grad u-dot||^2/D5 <= 0
LyapunovReport lyapunov_monotonicity(const std::vector<DiagnosticsRecord>& records,
                                     const LyapunovWeights& weights, double mu);

enum class ProbeKind { poincare, divcurl };

struct ProbeReport {
  ProbeKind kind = ProbeKind::poincare;
  int cells = 0;
  int trials = 0;
  int skipped = 0;
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

/// Random slip-compatible fields from the trigonometric eigenbasis
/// f_a = sum c sin(k_a pi x_a) cos(k_b pi x_b) cos(k_c pi x_c); reports
/// ||f||/||grad f|| (poincare) or ||grad f||/(||div f|| + ||curl f||) (divcurl).
ProbeReport inequality_probe(ProbeKind kind, int trials, const GridSpec& grid,
                             std::uint64_t seed);

/// Ratio for one given field (ghosts must be filled); nullopt for a zero denominator.
std::optional<double> probe_ratio(ProbeKind kind, const VectorField& f);

}  // namespace slipflow
