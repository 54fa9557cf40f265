#include "slipflow/eos.hpp"

#include <cmath>

#include "slipflow/errors.hpp"

namespace slipflow {

double EosParams::pressure(double rho) const { return a * std::pow(rho, gamma); }

double EosParams::sound_speed(double rho) const {
  if (rho <= 0.0) return 0.0;
  return std::sqrt(a * gamma * std::pow(rho, gamma - 1.0));
}

void validate(const EosParams& eos) {
  if (!(eos.a > 0.0)) throw ConfigError("eos.a", "pressure scale a must be > 0");
  if (!(eos.gamma > 1.0)) throw ConfigError("eos.gamma", "gamma > 1 required");
  if (!(eos.mu > 0.0)) throw ConfigError("eos.mu", "shear viscosity mu must be > 0");
  if (!(2.0 * eos.mu + 3.0 * eos.lambda >= 0.0)) {
    throw ConfigError("eos.lambda", "physical restriction 2*mu + 3*lambda >= 0 violated");
  }
  if (!(eos.rho_bar > 0.0)) throw ConfigError("eos.rho_bar", "reference density must be > 0");
}

ScalarField eos_pressure(const ScalarField& rho, const EosParams& eos) {
  ScalarField p(rho.grid());
  const auto in = rho.values();
  auto out = p.values();
  for (std::size_t q = 0; q < in.size(); ++q) {
    if (in[q] < 0.0) throw DomainError("eos_pressure: negative density");
    out[q] = eos.pressure(in[q]);
  }
  p.set_ghosts_filled(rho.ghosts_filled());
  return p;
}

double relative_entropy_G(double rho, const EosParams& eos) {
  if (rho < 0.0) throw DomainError("relative_entropy_G: negative density");
  const double g = eos.gamma;
  const double scale = eos.a * std::pow(eos.rho_bar, g);
  if (rho == 0.0) return scale;
  // With x = rho/rho_bar = 1 + d:  G = a rho_bar^g (x^g - 1 - g d) / (g - 1).
  const double d = rho / eos.rho_bar - 1.0;
  if (std::abs(d) < 1e-2) {
    // Binomial series sum_{n>=2} C(g, n) d^n; converges fast for |d| < 1e-2.
    double coeff = g * (g - 1.0) / 2.0;
    double power = d * d;
    double sum = 0.0;
    for (int n = 2; n <= 12; ++n) {
      sum += coeff * power;
      coeff *= (g - n) / (n + 1);
      power *= d;
    }
    return scale * sum / (g - 1.0);
  }
  const double xg_minus_1 = std::expm1(g * std::log1p(d));
  return scale * (xg_minus_1 - g * d) / (g - 1.0);
}

}  // namespace slipflow
