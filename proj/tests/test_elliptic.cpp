/// @file test_elliptic.cpp
/// @brief Conjugate gradients, the Dirichlet Laplacian and the Stokes solve
/// behind B[f], with a dense saddle-point oracle on a small grid.
#include <doctest.h>

#include <cmath>
#include <random>


#include "slipflow/elliptic.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/operators.hpp"
#include "slipflow/reduce.hpp"
#include "dense_stokes.hpp"
#include "support.hpp"

using namespace slipflow;
using testing::pi;

namespace {

ScalarField mean_zero_random(const GridSpec& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  ScalarField f(g);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] = U(rng); });
  const double m = interior_mean(f);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] -= m; });
  fill_scalar_ghosts(f);
  return f;
}

double grad_ratio(int n) {
  const GridSpec g = testing::unit_grid(n);
  const ScalarField f =
      testing::sample_cells(g, [](double x, double y, double) { return std::cos(pi * x) * std::cos(pi * y); });
  StokesSolver solver(g);
  const StokesResult r = solver.solve(f);
  CHECK(r.divergence_residual <= 1e-8);
  return dirichlet_gradient_norm(r.B) / std::sqrt(inner(f, f));
}

}  // namespace

TEST_SUITE("elliptic") {

TEST_CASE("conjugate gradients on a 1D Laplacian") {
  const int n = 50;
  const LinearMap op = [&](std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < n; ++i) y[i] = 2 * x[i] - (i > 0 ? x[i - 1] : 0.0) - (i + 1 < n ? x[i + 1] : 0.0);
  };
  std::vector<double> b(n, 1.0), x(n, 0.0);
  const SolveStats st = conjugate_gradient(op, {}, b, x, 1e-12, 200, true);
  CHECK(st.converged);
  CHECK(st.iterations <= n);
  CHECK(st.history.size() == static_cast<std::size_t>(st.iterations) + 1);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(0.5 * (i + 1) * (n - i)).epsilon(1e-9));
}

TEST_CASE("spectral Laplacian solve inverts the stencil") {
  const GridSpec g = testing::unit_grid(8);
  StokesSolver solver(g);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int a = 0; a < 3; ++a) {
    std::vector<double> x(g.padded_size(), 0.0), b(g.padded_size(), 0.0), y(g.padded_size(), 0.0);
    for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) { x[q] = U(rng); });
    apply_dirichlet_laplacian(g, a, x.data(), b.data());
    solver.laplacian_solve(a, b.data(), y.data());
    for_each_index(g, face_box(g, a, false), [&](int, int, int, std::size_t q) { CHECK(y[q] == doctest::Approx(x[q]).epsilon(1e-10)); });
  }
}

TEST_CASE("zero data gives a zero solution without iterating") {
  const GridSpec g = testing::unit_grid(8);
  ScalarField f(g);
  fill_scalar_ghosts(f);
  const StokesResult r = solve_stokes_dirichlet(f);
  CHECK(r.stats.iterations == 0);
  for (int a = 0; a < 3; ++a) {
    for (double v : r.B.component(a)) CHECK(v == 0.0);
  }
  for (double v : r.q.values()) CHECK(v == 0.0);
}

TEST_CASE("incompatible data is rejected") {
  const GridSpec g = testing::unit_grid(8);
  ScalarField f = mean_zero_random(g, 1);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] += 0.1; });
  fill_scalar_ghosts(f);
  CHECK_THROWS_AS(solve_stokes_dirichlet(f), CompatibilityError);
}

TEST_CASE("B[f] for a smooth f: divergence, walls and a stable gradient bound") {
  const double r16 = grad_ratio(16), r32 = grad_ratio(32), r48 = grad_ratio(48);
  CHECK(std::abs(r32 / r16 - 1) <= 0.1);
  CHECK(std::abs(r48 / r32 - 1) <= 0.1);

  const GridSpec g = testing::unit_grid(16);
  const StokesResult r = solve_stokes_dirichlet(mean_zero_random(g, 5));
  CHECK(r.stats.converged);
  for (int a = 0; a < 3; ++a) {
    for (int j = 0; j < 16; ++j) {
      for (int k = 0; k < 16; ++k) {
        std::array<int, 3> lo{}, hi{};
        hi[a] = 16;
        lo[(a + 1) % 3] = hi[(a + 1) % 3] = j;
        lo[(a + 2) % 3] = hi[(a + 2) % 3] = k;
        CHECK(r.B.at(a, lo[0], lo[1], lo[2]) == 0.0);
        CHECK(r.B.at(a, hi[0], hi[1], hi[2]) == 0.0);
      }
    }
  }
  CHECK(std::abs(interior_mean(r.q)) < 1e-12);
}

TEST_CASE("CG inner solver agrees with the spectral one") {
  const GridSpec g = testing::unit_grid(8);
  const ScalarField f = mean_zero_random(g, 9);
  StokesOptions o;
  StokesSolver spectral(g, o);
  o.inner = InnerSolver::cg;
  StokesSolver cg(g, o);
  const StokesResult a = spectral.solve(f), b = cg.solve(f);
  for (int c = 0; c < 3; ++c) {
    for_each_index(g, face_box(g, c), [&](int, int, int, std::size_t q) {
      CHECK(std::abs(a.B.data(c)[q] - b.B.data(c)[q]) <= 1e-8);
    });
  }
}

TEST_CASE("dense saddle-point oracle on an 8^3 grid") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  PresetParams p;
  p.amplitude = 0.1;
  const FlowState s = make_initial_state(p, g, eos).state;
  ScalarField f(g);
  const double mean = interior_mean(s.rho);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] = s.rho[q] - mean; });
  fill_scalar_ghosts(f);

  const VectorField Bd = testing::dense_stokes_field(f);
  const StokesResult iter = solve_stokes_dirichlet(f, 1e-10);
  double worst = 0.0;
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a), [&](int, int, int, std::size_t q) {
      worst = std::max(worst, std::abs(Bd.data(a)[q] - iter.B.data(a)[q]));
    });
  }
  CHECK(worst <= 1e-6);
  const double pairing_dense = inner(s.mom, Bd);
  CHECK(std::abs(bogovskii_pairing(s) - pairing_dense) <= 1e-6);
}

TEST_CASE("pairing vanishes at rest") {
  const GridSpec g = testing::unit_grid(8);
  EosParams eos;
  PresetParams p;
  p.preset = Preset::uniform;
  CHECK(bogovskii_pairing(make_initial_state(p, g, eos).state) == 0.0);

  p.preset = Preset::smooth_perturbation;
  p.amplitude = 0.2;
  FlowState s = make_initial_state(p, g, eos).state;
  for (int a = 0; a < 3; ++a) {
    for (double& v : s.mom.component(a)) v = 0.0;
  }
  CHECK(bogovskii_pairing(s) == 0.0);
}

}  // TEST_SUITE
