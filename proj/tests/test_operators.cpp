/// @file test_operators.cpp
/// @brief Staggered stencils against exact and analytic oracles.
#include <doctest.h>

#include <cmath>
#include <random>

#include "slipflow/eos.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/operators.hpp"
#include "slipflow/reduce.hpp"
#include "slipflow/solver.hpp"
#include "support.hpp"

using namespace slipflow;
using testing::Fn3;
using testing::pi;

namespace {

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for_each_index(f.grid(), cell_box(f.grid()), [&](int, int, int, std::size_t q) { m = std::max(m, std::abs(f[q])); });
  return m;
}

// Max error of the divergence of (sin pi x, 0, 0) against pi cos pi x.
double div_sine_error(int n) {
  const GridSpec g = testing::unit_grid(n);
  const VectorField u = testing::sample_faces(
      g, {[](double x, double, double) { return std::sin(pi * x); }, testing::zero_fn(), testing::zero_fn()});
  const ScalarField d = divergence(u);
  double e = 0.0;
  for_each_index(g, cell_box(g), [&](int i, int, int, std::size_t q) {
    e = std::max(e, std::abs(d[q] - pi * std::cos(pi * g.center(0, i))));
  });
  return e;
}

// Max error of the z-edge curl of the slip eigenfield
// (sin pi x cos pi y cos pi z, -cos pi x sin pi y cos pi z, 0).
double curl_eigen_error(int n) {
  const GridSpec g = testing::unit_grid(n);
  const VectorField u = testing::sample_faces(
      g, {[](double x, double y, double z) { return std::sin(pi * x) * std::cos(pi * y) * std::cos(pi * z); },
          [](double x, double y, double z) { return -std::cos(pi * x) * std::sin(pi * y) * std::cos(pi * z); },
          testing::zero_fn()});
  const EdgeField w = curl(u);
  double e = 0.0;
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, edge_box(g, a), [&](int i, int j, int k, std::size_t q) {
      std::array<double, 3> x{g.node(0, i), g.node(1, j), g.node(2, k)};
      x[a] = g.center(a, a == 0 ? i : a == 1 ? j : k);
      const double sx = std::sin(pi * x[0]), cx = std::cos(pi * x[0]);
      const double sy = std::sin(pi * x[1]), cy = std::cos(pi * x[1]);
      const double sz = std::sin(pi * x[2]), cz = std::cos(pi * x[2]);
      double exact = 0.0;
      if (a == 0) exact = -pi * cx * sy * sz;        // -d_z u_y
      if (a == 1) exact = -pi * sx * cy * sz;        //  d_z u_x
      if (a == 2) exact = 2 * pi * sx * sy * cz;     //  d_x u_y - d_y u_x
      e = std::max(e, std::abs(w.data(a)[q] - exact));
    });
  }
  return e;
}

// Max error of the viscous operator on (sin pi x, 0, 0) against -2 pi^2 sin pi x.
double viscous_sine_error(int n) {
  const GridSpec g = testing::unit_grid(n);
  const VectorField u = testing::sample_faces(
      g, {[](double x, double, double) { return std::sin(pi * x); }, testing::zero_fn(), testing::zero_fn()});
  const VectorField l = laplacian_vector(u, 1.0, 0.0);
  double e = 0.0;
  for_each_index(g, face_box(g, 0, false), [&](int i, int, int, std::size_t q) {
    e = std::max(e, std::abs(l.data(0)[q] + 2 * pi * pi * std::sin(pi * g.node(0, i))));
  });
  for (int a = 1; a < 3; ++a) {
    for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) { e = std::max(e, std::abs(l.data(a)[q])); });
  }
  return e;
}

std::array<Fn3, 3> smooth_slip_velocity() {
  return {[](double x, double y, double z) { return std::sin(pi * x) * std::cos(pi * y) * std::cos(2 * pi * z); },
          [](double x, double y, double z) { return std::cos(2 * pi * x) * std::sin(pi * y) * std::cos(pi * z); },
          [](double x, double y, double z) { return std::cos(pi * x) * std::cos(2 * pi * y) * std::sin(pi * z); }};
}

bool away_from_walls(const GridSpec& g, int i, int j, int k, int margin) {
  const std::array<int, 3> idx{i, j, k};
  for (int a = 0; a < 3; ++a) {
    if (idx[a] < margin || idx[a] > g.cells[a] - margin) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("divergence of the identity field is exactly 3") {
  const GridSpec g = testing::unit_grid(8);
  const VectorField u = testing::sample_faces_everywhere(
      g, {[](double x, double, double) { return x; }, [](double, double y, double) { return y; },
          [](double, double, double z) { return z; }});
  const ScalarField d = divergence(u);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { CHECK(d[q] == doctest::Approx(3.0).epsilon(1e-14)); });
}

TEST_CASE("divergence of a constant field vanishes") {
  const GridSpec g = testing::unit_grid(8);
  const VectorField u = testing::sample_faces_everywhere(
      g, {[](double, double, double) { return 0.7; }, [](double, double, double) { return -1.1; },
          [](double, double, double) { return 2.0; }});
  CHECK(max_abs(divergence(u)) == 0.0);
}

TEST_CASE("divergence of sin(pi x) is second order") {
  const double e16 = div_sine_error(16), e32 = div_sine_error(32);
  CHECK(e32 < 0.01);
  CHECK(e16 / e32 >= 3.5);
}

TEST_CASE("operators refuse unfilled ghosts") {
  const GridSpec g = testing::unit_grid(8);
  VectorField u(g);
  CHECK_THROWS_AS(divergence(u), ContractViolation);
  CHECK_THROWS_AS(curl(u), ContractViolation);
  CHECK_THROWS_AS(gradient(ScalarField(g)), ContractViolation);
}

TEST_CASE("curl of a rotation is exactly (0, 0, 2)") {
  const GridSpec g = testing::unit_grid(8);
  const VectorField u = testing::sample_faces_everywhere(
      g, {[](double, double y, double) { return -y; }, [](double x, double, double) { return x; }, testing::zero_fn()});
  const EdgeField w = curl(u);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, edge_box(g, a), [&](int, int, int, std::size_t q) {
      CHECK(w.data(a)[q] == doctest::Approx(a == 2 ? 2.0 : 0.0).epsilon(1e-14));
    });
  }
}

TEST_CASE("curl of a quadratic gradient vanishes") {
  const GridSpec g = testing::unit_grid(8);
  // phi = x^2 + x y + 3 y z - z^2
  const VectorField u = testing::sample_faces_everywhere(
      g, {[](double x, double y, double) { return 2 * x + y; },
          [](double x, double, double z) { return x + 3 * z; },
          [](double, double y, double z) { return 3 * y - 2 * z; }});
  const EdgeField w = curl(u);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, edge_box(g, a), [&](int, int, int, std::size_t q) { CHECK(std::abs(w.data(a)[q]) < 1e-12); });
  }
}

TEST_CASE("curl of the slip eigenfield is second order") {
  const double e16 = curl_eigen_error(16), e32 = curl_eigen_error(32);
  CHECK(e32 < 0.05);
  CHECK(e16 / e32 >= 3.5);
}

TEST_CASE("gradient examples") {
  const GridSpec g = testing::unit_grid(8);
  ScalarField pc(g, 4.2);
  fill_scalar_ghosts(pc);
  const VectorField gc = gradient(pc);
  for (int a = 0; a < 3; ++a) {
    for (double v : gc.component(a)) CHECK(v == 0.0);
  }
  const VectorField gx = gradient(testing::sample_cells(g, [](double x, double, double) { return x; }));
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) {
      CHECK(gx.data(a)[q] == doctest::Approx(a == 0 ? 1.0 : 0.0).epsilon(1e-13));
    });
  }
  // Wall faces carry no gradient (homogeneous Neumann pressure).
  for_each_index(g, IndexBox{{0, 0, 0}, {1, 8, 8}}, [&](int, int, int, std::size_t q) { CHECK(gx.data(0)[q] == 0.0); });
}

TEST_CASE("viscous operator annihilates linear fields") {
  const GridSpec g = testing::unit_grid(8);
  const VectorField u = testing::sample_faces_everywhere(
      g, {[](double x, double y, double z) { return 1 + x - 2 * y + z; },
          [](double x, double y, double z) { return 3 * x + y - z; },
          [](double x, double y, double z) { return -x + 0.5 * y + 2 * z; }});
  const VectorField l = laplacian_vector(u, 1.3, 0.4);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) { CHECK(std::abs(l.data(a)[q]) < 1e-10); });
  }
}

TEST_CASE("viscous operator on sin(pi x) is second order") {
  const double e16 = viscous_sine_error(16), e32 = viscous_sine_error(32);
  CHECK(e32 < 0.05);
  CHECK(e16 / e32 >= 3.5);
}

TEST_CASE("advection examples") {
  const GridSpec g = testing::unit_grid(16);
  const ScalarField rho = testing::sample_cells(g, [](double x, double y, double z) {
    return 1 + 0.3 * std::cos(pi * x) * std::cos(pi * y) * std::cos(pi * z);
  });
  VectorField zero(g);
  fill_vector_ghosts(zero);
  CHECK(max_abs(advect_scalar(rho, zero)) == 0.0);

  const VectorField u = testing::sample_faces(g, smooth_slip_velocity());
  ScalarField cf(g, 2.5);
  fill_scalar_ghosts(cf);
  const ScalarField adv = advect_scalar(cf, u);
  const ScalarField d = divergence(u);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) {
    CHECK(adv[q] == doctest::Approx(-2.5 * d[q]).epsilon(1e-12).scale(1.0));
  });
}

TEST_CASE("advection conserves mass exactly") {
  const GridSpec g = testing::unit_grid(12);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.1, 2.0), V(-1.0, 1.0);
  ScalarField rho(g);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { rho[q] = U(rng); });
  fill_scalar_ghosts(rho);
  VectorField u(g);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a), [&](int, int, int, std::size_t q) { u.data(a)[q] = V(rng); });
  }
  fill_vector_ghosts(u);
  const ScalarField adv = advect_scalar(rho, u);
  CHECK(std::abs(integrate(adv)) < 1e-13 * g.interior_cells() * g.cell_volume() * 10);
}

TEST_CASE("material acceleration examples") {
  const GridSpec g = testing::unit_grid(12);
  EosParams eos;
  const auto one = [](double, double, double) { return 1.0; };
  const FlowState rest = testing::make_state(g, one, {testing::zero_fn(), testing::zero_fn(), testing::zero_fn()});
  const MaterialAcceleration m0 = material_acceleration(rest, rest, 1e-3, 1e-10);
  for (int a = 0; a < 3; ++a) {
    for (double v : m0.udot.component(a)) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(material_acceleration(rest, rest, 0.0, 1e-10), DomainError);

  // Uniform velocity decaying like exp(-t); walls only affect faces next to them.
  const std::array<double, 3> c{0.3, -0.2, 0.1};
  const auto uniform = [&](double scale) {
    return std::array<Fn3, 3>{[=](double, double, double) { return scale * c[0]; },
                              [=](double, double, double) { return scale * c[1]; },
                              [=](double, double, double) { return scale * c[2]; }};
  };
  const double t = 0.4, dt = 1e-3;
  const FlowState s0 = testing::make_state(g, one, uniform(std::exp(-t)));
  const FlowState s1 = testing::make_state(g, one, uniform(std::exp(-(t + dt))));
  const MaterialAcceleration m = material_acceleration(s0, s1, dt, 1e-10);
  const FlowState s_steady = testing::make_state(g, one, uniform(1.0));
  const MaterialAcceleration ms = material_acceleration(s_steady, s_steady, dt, 1e-10);
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a, false), [&](int i, int j, int k, std::size_t q) {
      if (!away_from_walls(g, i, j, k, 3)) return;
      CHECK(m.udot.data(a)[q] == doctest::Approx(-std::exp(-t) * c[a]).epsilon(2e-3));
      CHECK(std::abs(ms.udot.data(a)[q]) < 1e-14);
    });
  }
}

TEST_CASE("effective viscous flux examples") {
  const GridSpec g = testing::unit_grid(10);
  EosParams eos;
  eos.mu = 0.7;
  eos.lambda = 0.2;
  const auto one = [](double, double, double) { return 1.0; };
  const FlowState rest = testing::make_state(g, one, {testing::zero_fn(), testing::zero_fn(), testing::zero_fn()});
  CHECK(max_abs(effective_viscous_flux(rest, eos, 1e-10)) == 0.0);

  // u = (x, y, z): div u = 3 away from the walls, pressure uniform.
  const FlowState lin = testing::make_state(
      g, one, {[](double x, double, double) { return x; }, [](double, double y, double) { return y; },
               [](double, double, double z) { return z; }});
  const ScalarField F = effective_viscous_flux(lin, eos, 1e-10);
  for_each_index(g, cell_box(g), [&](int i, int j, int k, std::size_t q) {
    if (away_from_walls(g, i, j, k, 1) && i < 9 && j < 9 && k < 9) {
      CHECK(F[q] == doctest::Approx(3 * eos.nu_long()).epsilon(1e-13));
    }
  });
}

TEST_CASE("effective viscous flux has zero mean") {
  const GridSpec g = testing::unit_grid(12);
  EosParams eos;
  eos.gamma = 1.4;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.2, 1.8), V(-1.0, 1.0);
  FlowState s;
  s.rho = ScalarField(g);
  s.mom = VectorField(g);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { s.rho[q] = U(rng); });
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a), [&](int, int, int, std::size_t q) { s.mom.data(a)[q] = V(rng); });
  }
  fill_ghosts(s);
  const ScalarField F = effective_viscous_flux(s, eos, 1e-10);
  double scale = 0.0;
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { scale += std::abs(F[q]) * g.cell_volume(); });
  CHECK(std::abs(integrate(F)) <= 1e-12 * scale);
}

TEST_CASE("momentum residual vanishes at equilibrium") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  const auto one = [](double, double, double) { return 1.0; };
  const FlowState rest = testing::make_state(g, one, {testing::zero_fn(), testing::zero_fn(), testing::zero_fn()});
  VectorField udot(g);
  fill_vector_ghosts(udot);
  CHECK(momentum_residual(rest, udot, eos, 1e-10) == 0.0);
}

TEST_CASE("momentum residual of a solver step converges") {
  const auto residual = [](int n) {
    const GridSpec g = testing::unit_grid(n);
    EosParams eos;
    PresetParams p;
    const FlowState s0 = make_initial_state(p, g, eos).state;
    StepControl ctl;
    const double dt = cfl_dt(s0, eos, ctl, 1e-10);
    const FlowState s1 = step_ssprk3(s0, eos, dt, 1e-10);
    const MaterialAcceleration m = material_acceleration(s0, s1, dt, 1e-10);
    return momentum_residual(s1, m.udot, eos, 1e-10);
  };
  const double r16 = residual(16), r32 = residual(32);
  CAPTURE(r16);
  CAPTURE(r32);
  CHECK(r32 <= 0.05);
  CHECK(r16 / r32 >= 2.0);
}

TEST_CASE("observed order helper") {
  CHECK(observed_order(4e-4, 1e-4) == doctest::Approx(2.0));
  CHECK(observed_order(9e-4, 1e-4, 3.0) == doctest::Approx(2.0));
}

}  // TEST_SUITE
