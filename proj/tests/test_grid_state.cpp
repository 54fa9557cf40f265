/// @file test_grid_state.cpp
/// @brief Grid construction, ghost fill and initial-data presets.
#include <doctest.h>

#include <cmath>
#include <limits>

#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"
#include "slipflow/state.hpp"
#include "support.hpp"

using namespace slipflow;
using testing::pi;

TEST_SUITE("grid_state") {

TEST_CASE("unit box at 32 cells") {
  const GridSpec g = build_grid({1, 1, 1}, {32, 32, 32}, 2);
  for (int a = 0; a < 3; ++a) CHECK(g.spacing[a] == 1.0 / 32);
  CHECK(g.domain_volume() == 1.0);
  CHECK(g.padded(0) == 36);
}

TEST_CASE("elongated box keeps cubic cells") {
  const GridSpec g = build_grid({2, 1, 1}, {64, 32, 32}, 2);
  for (int a = 0; a < 3; ++a) CHECK(g.spacing[a] == 1.0 / 32);
}

TEST_CASE("too few cells on an axis is a configuration error") {
  CHECK_THROWS_AS(build_grid({1, 1, 1}, {3, 32, 32}, 2), ConfigError);
  CHECK_THROWS_AS(build_grid({-1, 1, 1}, {8, 8, 8}, 2), ConfigError);
}

TEST_CASE("index layout is x-fastest with ghost offset") {
  const GridSpec g = testing::unit_grid(8);
  CHECK(g.index(0, 0, 0) == static_cast<std::size_t>(2 + 12 * (2 + 12 * 2)));
  CHECK(g.index(1, 0, 0) - g.index(0, 0, 0) == 1);
  CHECK(g.index(0, 1, 0) - g.index(0, 0, 0) == 12);
  CHECK(face_box(g, 0, true).hi[0] == 9);
  CHECK(face_box(g, 0, false).lo[0] == 1);
}

TEST_CASE("zero velocity is unchanged by the ghost fill") {
  const GridSpec g = testing::unit_grid(8);
  VectorField u(g);
  fill_vector_ghosts(u);
  for (int a = 0; a < 3; ++a) {
    for (double v : u.component(a)) CHECK(v == 0.0);
  }
}

TEST_CASE("slip eigenfield vanishes on walls and the fill is idempotent") {
  const GridSpec g = testing::unit_grid(16);
  std::array<testing::Fn3, 3> f;
  for (int a = 0; a < 3; ++a) {
    f[a] = [&g, a](double x, double y, double z) { return slip_eigenfield(g, a, x, y, z); };
  }
  VectorField u = testing::sample_faces(g, f);
  for (int a = 0; a < 3; ++a) {
    for (int j = 0; j < 16; ++j) {
      for (int k = 0; k < 16; ++k) {
        // Wall faces of component a: index 0 and 16 along axis a.
        std::array<int, 3> il{}, ih{};
        ih[a] = 16;
        il[(a + 1) % 3] = ih[(a + 1) % 3] = j;
        il[(a + 2) % 3] = ih[(a + 2) % 3] = k;
        const auto x = testing::face_pos(g, a, il[0], il[1], il[2]);
        CHECK(std::abs(slip_eigenfield(g, a, x[0], x[1], x[2])) < 1e-14);
        CHECK(u.at(a, il[0], il[1], il[2]) == 0.0);
        CHECK(u.at(a, ih[0], ih[1], ih[2]) == 0.0);
      }
    }
  }
  VectorField again = u;
  fill_vector_ghosts(again);
  CHECK(again == u);
}

TEST_CASE("non-finite interior value raises a blowup") {
  const GridSpec g = testing::unit_grid(8);
  ScalarField f(g, 1.0);
  f.at(3, 4, 5) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fill_scalar_ghosts(f), NumericalBlowup);
  VectorField u(g);
  u.at(1, 2, 2, 2) = INFINITY;
  CHECK_THROWS_AS(fill_vector_ghosts(u), NumericalBlowup);
}

TEST_CASE("scalar ghosts mirror the interior") {
  const GridSpec g = testing::unit_grid(8);
  ScalarField f = testing::sample_cells(g, [](double x, double y, double z) { return x + 2 * y + 3 * z; });
  CHECK(f.at(-1, 3, 3) == f.at(0, 3, 3));
  CHECK(f.at(-2, 3, 3) == f.at(1, 3, 3));
  CHECK(f.at(8, 3, 3) == f.at(7, 3, 3));
  CHECK(f.at(3, 3, 9) == f.at(3, 3, 6));
}

TEST_CASE("uniform preset is the equilibrium") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  eos.rho_bar = 1.7;
  PresetParams p;
  p.preset = Preset::uniform;
  const InitialState s = make_initial_state(p, g, eos);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { CHECK(s.state.rho[q] == 1.7); });
  for (int a = 0; a < 3; ++a) {
    for (double v : s.state.mom.component(a)) CHECK(v == 0.0);
  }
  double c0 = 0.0;
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) {
    c0 += relative_entropy_G(s.state.rho[q], eos);
  });
  CHECK(c0 == 0.0);
}

TEST_CASE("smooth perturbation minimum sits at the corner cell") {
  const GridSpec g = testing::unit_grid(32);
  EosParams eos;
  PresetParams p;
  p.preset = Preset::smooth_perturbation;
  p.amplitude = 0.1;
  const InitialState s = make_initial_state(p, g, eos);
  const double c = std::cos(pi * g.spacing[0] / 2);
  const double expected = 1.0 - 0.1 * c * c * c;
  CHECK(s.rho_min0 == doctest::Approx(expected).epsilon(1e-13));
  CHECK(std::abs(s.rho_min0 - 0.9) < 0.1 * 3 * (1 - c) + 1e-12);
  CHECK(std::abs(interior_mean(s.state.rho) - 1.0) <= 1e-14);
}

TEST_CASE("every preset preserves the mean density") {
  const GridSpec g = testing::unit_grid(16);
  EosParams eos;
  eos.rho_bar = 1.3;
  for (Preset pr : {Preset::uniform, Preset::smooth_perturbation, Preset::large_amplitude,
                    Preset::positive_floor, Preset::vacuum_point}) {
    PresetParams p;
    p.preset = pr;
    p.amplitude = pr == Preset::large_amplitude ? 0.5 : 0.05;
    const InitialState s = make_initial_state(p, g, eos);
    CAPTURE(preset_name(pr));
    CHECK(std::abs(interior_mean(s.state.rho) - 1.3) <= 1e-14 * 1.3 * 4);
  }
}

TEST_CASE("vacuum preset has exact zeros and positive-floor respects rho_star") {
  const GridSpec g = testing::unit_grid(16);
  EosParams eos;
  PresetParams p;
  p.preset = Preset::vacuum_point;
  const InitialState v = make_initial_state(p, g, eos);
  CHECK(v.rho_min0 <= 1e-12);
  p.preset = Preset::positive_floor;
  p.rho_star = 0.5;
  const InitialState f = make_initial_state(p, g, eos);
  CHECK(f.rho_min0 >= 0.5 - 1e-12);
}

TEST_CASE("preset errors") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  PresetParams p;
  p.preset = Preset::smooth_perturbation;
  p.amplitude = 1.2;
  CHECK_THROWS_AS(make_initial_state(p, g, eos), ConfigError);
  p.preset = Preset::large_amplitude;
  p.amplitude = 0.6;
  CHECK_THROWS_AS(make_initial_state(p, g, eos), ConfigError);
  CHECK_THROWS_AS(parse_preset("gaussian"), ConfigError);
  CHECK(parse_preset("vacuum-point") == Preset::vacuum_point);
}

TEST_CASE("velocity reconstruction floors only the division") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  PresetParams p;
  p.preset = Preset::vacuum_point;
  const FlowState s = make_initial_state(p, g, eos).state;
  const VectorField u = reconstruct_velocity(s, 1e-10);
  for (int a = 0; a < 3; ++a) {
    for (double v : u.component(a)) CHECK(std::isfinite(v));
  }
  FlowState raw = s;
  raw.mom.set_ghosts_filled(false);
  CHECK_THROWS_AS(reconstruct_velocity(raw, 1e-10), ContractViolation);
}

}  // TEST_SUITE
