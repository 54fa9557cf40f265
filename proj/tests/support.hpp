/// @file support.hpp
/// @brief Small helpers shared by the unit tests: analytic sampling on the
/// staggered grid and tolerant comparisons.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include "slipflow/grid.hpp"
#include "slipflow/state.hpp"

namespace testing {

using slipflow::GridSpec;
using slipflow::ScalarField;
using slipflow::VectorField;
using Fn3 = std::function<double(double, double, double)>;

inline constexpr double pi = std::numbers::pi;

inline GridSpec unit_grid(int n, int ghost = 2) {
  return slipflow::build_grid({1, 1, 1}, {n, n, n}, ghost);
}

/// Position of face (i, j, k) normal to `axis`.
inline std::array<double, 3> face_pos(const GridSpec& g, int axis, int i, int j, int k) {
  std::array<double, 3> x{g.center(0, i), g.center(1, j), g.center(2, k)};
  x[axis] = g.node(axis, axis == 0 ? i : axis == 1 ? j : k);
  return x;
}

/// Samples each component at its faces over the whole padded array (ghosts
/// included) and marks the ghosts filled, so no boundary condition is applied.
inline VectorField sample_faces_everywhere(const GridSpec& g, const std::array<Fn3, 3>& f) {
  VectorField v(g);
  const int lo = -g.ghost;
  for (int a = 0; a < 3; ++a) {
    slipflow::IndexBox box{{lo, lo, lo}, {g.cells[0] + g.ghost, g.cells[1] + g.ghost, g.cells[2] + g.ghost}};
    slipflow::for_each_index(g, box, [&](int i, int j, int k, std::size_t q) {
      const auto x = face_pos(g, a, i, j, k);
      v.data(a)[q] = f[a](x[0], x[1], x[2]);
    });
  }
  v.set_ghosts_filled(true);
  return v;
}

/// Samples interior faces (walls included) and applies the slip ghost fill.
inline VectorField sample_faces(const GridSpec& g, const std::array<Fn3, 3>& f) {
  VectorField v(g);
  for (int a = 0; a < 3; ++a) {
    slipflow::for_each_index(g, slipflow::face_box(g, a, true), [&](int i, int j, int k, std::size_t q) {
      const auto x = face_pos(g, a, i, j, k);
      v.data(a)[q] = f[a](x[0], x[1], x[2]);
    });
  }
  slipflow::fill_vector_ghosts(v);
  return v;
}

inline ScalarField sample_cells(const GridSpec& g, const Fn3& f) {
  ScalarField s(g);
  slipflow::for_each_index(g, slipflow::cell_box(g), [&](int i, int j, int k, std::size_t q) {
    s[q] = f(g.center(0, i), g.center(1, j), g.center(2, k));
  });
  slipflow::fill_scalar_ghosts(s);
  return s;
}

inline Fn3 zero_fn() {
  return [](double, double, double) { return 0.0; };
}

/// Flow state with the given density and velocity (momentum = face density * u).
inline slipflow::FlowState make_state(const GridSpec& g, const Fn3& rho, const std::array<Fn3, 3>& u) {
  slipflow::FlowState s;
  s.rho = sample_cells(g, rho);
  s.mom = sample_faces(g, u);
  for (int a = 0; a < 3; ++a) {
    const auto st = g.stride(a);
    slipflow::for_each_index(g, slipflow::face_box(g, a, true), [&](int, int, int, std::size_t q) {
      s.mom.data(a)[q] *= slipflow::face_density(s.rho.data(), st, q);
    });
  }
  slipflow::fill_ghosts(s);
  return s;
}

}  // namespace testing
