/// @file test_eos.cpp
/// @brief Pressure law, relative entropy and physical parameter checks.
#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "slipflow/eos.hpp"
#include "slipflow/errors.hpp"
#include "support.hpp"

using namespace slipflow;

namespace {

// rho * int_{rho_bar}^{rho} (P(s) - P(rho_bar)) / s^2 ds by adaptive quadrature.
double G_quadrature(double rho, const EosParams& eos) {
  const double pbar = eos.pressure(eos.rho_bar);
  const auto f = [&](double s) { return (eos.pressure(s) - pbar) / (s * s); };
  return rho * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, eos.rho_bar, rho, 20, 1e-15);
}

}  // namespace

TEST_SUITE("eos") {

TEST_CASE("pressure examples") {
  EosParams eos;
  const GridSpec g = testing::unit_grid(4);
  const ScalarField p1 = eos_pressure(ScalarField(g, 1.0), eos);
  const ScalarField p0 = eos_pressure(ScalarField(g, 0.0), eos);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) {
    CHECK(p1[q] == 1.0);
    CHECK(p0[q] == 0.0);
  });
  eos.gamma = 1.4;
  CHECK(eos.pressure(2.0) == doctest::Approx(2.6390158215457884).epsilon(1e-15));
  CHECK(eos.pressure(2.0) == doctest::Approx(std::exp(1.4 * std::log(2.0))).epsilon(1e-15));
  CHECK_THROWS_AS(eos_pressure(ScalarField(g, -1.0), eos), DomainError);
}

TEST_CASE("sound speed") {
  EosParams eos;
  CHECK(eos.sound_speed(1.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(eos.sound_speed(0.0) == 0.0);
}

TEST_CASE("relative entropy at the reference density is zero") {
  EosParams eos;
  CHECK(relative_entropy_G(eos.rho_bar, eos) == 0.0);
  eos.gamma = 1.4;
  CHECK(relative_entropy_G(eos.rho_bar, eos) == 0.0);
}

TEST_CASE("gamma 2 closed form") {
  EosParams eos;
  CHECK(relative_entropy_G(2.0, eos) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(G_quadrature(2.0, eos) == doctest::Approx(1.0).epsilon(1e-12));
  for (double rho : {0.0, 0.3, 0.9, 1.1, 3.5}) {
    CHECK(relative_entropy_G(rho, eos) == doctest::Approx((rho - 1) * (rho - 1)).epsilon(1e-13));
  }
}

TEST_CASE("gamma 1.4 agrees with quadrature") {
  EosParams eos;
  eos.gamma = 1.4;
  for (double rho : {0.5, 0.05, 0.8, 1.5, 4.0}) {
    CAPTURE(rho);
    CHECK(std::abs(relative_entropy_G(rho, eos) - G_quadrature(rho, eos)) <= 1e-10);
  }
}

TEST_CASE("relative entropy is non-negative and vanishes only at rho_bar") {
  EosParams eos;
  eos.gamma = 1.7;
  eos.a = 2.5;
  eos.rho_bar = 0.8;
  for (double rho = 0.0; rho < 3.0; rho += 0.05) {
    if (std::abs(rho - 0.8) > 1e-12) CHECK(relative_entropy_G(rho, eos) > 0.0);
  }
  CHECK_THROWS_AS(relative_entropy_G(-0.1, eos), DomainError);
}

TEST_CASE("parameter validation") {
  EosParams eos;
  CHECK_NOTHROW(validate(eos));
  eos.lambda = -1.0;
  CHECK_THROWS_AS(validate(eos), ConfigError);
  eos = {};
  eos.gamma = 1.0;
  CHECK_THROWS_AS(validate(eos), ConfigError);
  eos = {};
  eos.mu = 0.0;
  CHECK_THROWS_AS(validate(eos), ConfigError);
  eos = {};
  eos.lambda = -2.0 / 3.0;  // boundary of 2 mu + 3 lambda >= 0
  CHECK_NOTHROW(validate(eos));
  try {
    EosParams bad;
    bad.gamma = 0.9;
    validate(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "eos.gamma");
  }
}

}  // TEST_SUITE
