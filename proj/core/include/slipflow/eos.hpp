#pragma once

#include "slipflow/grid.hpp"

namespace slipflow {

/// Isentropic pressure law P = a rho^gamma plus the two viscosities and the
/// reference (mean) density.
struct EosParams {
  double a = 1.0;
  double gamma = 2.0;
  double mu = 1.0;
  double lambda = 0.0;
  double rho_bar = 1.0;

  /// Longitudinal viscosity 2 mu + lambda.
  double nu_long() const { return 2.0 * mu + lambda; }

  double pressure(double rho) const;
  double sound_speed(double rho) const;

  bool operator==(const EosParams&) const = default;
};

/// Throws ConfigError unless a > 0, gamma > 1, mu > 0, 2mu + 3lambda >= 0, rho_bar > 0.
void validate(const EosParams& eos);

/// Pointwise P = a rho^gamma over the whole padded array (ghosts included).
/// Throws DomainError on negative density.
ScalarField eos_pressure(const ScalarField& rho, const EosParams& eos);

/// Relative entropy G(rho) = rho * int_{rho_bar}^{rho} (P(s) - P(rho_bar)) / s^2 ds,
/// evaluated in closed form (series expansion near rho_bar).
double relative_entropy_G(double rho, const EosParams& eos);

}  // namespace slipflow
