/// @file grid.hpp
/// @brief Box geometry, staggered (MAC) index conventions and field storage.
///
/// All fields share one padded layout of (Nx+2g)(Ny+2g)(Nz+2g) entries with
/// x fastest. The meaning of index (i,j,k) depends on the placement:
///
///   cell      ((i+1/2)hx, (j+1/2)hy, (k+1/2)hz)
///   x-face    (i hx,      (j+1/2)hy, (k+1/2)hz)   walls at i = 0 and i = Nx
///   x-edge    ((i+1/2)hx, j hy,      k hz)        (vorticity x-component)
///
/// and cyclically for y and z. With this convention the face at index q is
/// the lower face of cell q, so div/grad/curl are plain stride differences.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace slipflow {

struct GridSpec {
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  std::array<int, 3> cells{32, 32, 32};
  std::array<double, 3> spacing{1.0 / 32, 1.0 / 32, 1.0 / 32};
  int ghost = 2;

  int padded(int axis) const { return cells[axis] + 2 * ghost; }
  std::size_t padded_size() const {
    return static_cast<std::size_t>(padded(0)) * padded(1) * padded(2);
  }
  std::ptrdiff_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return padded(0);
    return static_cast<std::ptrdiff_t>(padded(0)) * padded(1);
  }
  std::array<std::ptrdiff_t, 3> strides() const { return {stride(0), stride(1), stride(2)}; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i + ghost) +
           static_cast<std::size_t>(padded(0)) *
               (static_cast<std::size_t>(j + ghost) +
                static_cast<std::size_t>(padded(1)) * static_cast<std::size_t>(k + ghost));
  }

  std::size_t interior_cells() const {
    return static_cast<std::size_t>(cells[0]) * cells[1] * cells[2];
  }
  double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
  double domain_volume() const { return extent[0] * extent[1] * extent[2]; }
  double min_spacing() const;

  double center(int axis, int i) const { return (i + 0.5) * spacing[axis]; }
  double node(int axis, int i) const { return i * spacing[axis]; }

  bool operator==(const GridSpec&) const = default;
};

/// Validates and builds a grid. Throws ConfigError on non-positive extents,
/// fewer than 4 cells on an axis or ghost_width < 1.
GridSpec build_grid(std::array<double, 3> extent, std::array<int, 3> cells, int ghost_width);

/// Half-open index box [lo, hi).
struct IndexBox {
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};

  std::size_t count() const {
    return static_cast<std::size_t>(hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
  }
};

IndexBox cell_box(const GridSpec& g);
/// Faces of component `axis`; with include_walls the two wall planes are part of the box.
IndexBox face_box(const GridSpec& g, int axis, bool include_walls = true);
IndexBox edge_box(const GridSpec& g, int axis);

/// Calls f(i, j, k, flat_index) over every index in the box, x fastest.
template <class F>
inline void for_each_index(const GridSpec& g, const IndexBox& box, F&& f) {
  for (int k = box.lo[2]; k < box.hi[2]; ++k) {
    for (int j = box.lo[1]; j < box.hi[1]; ++j) {
      std::size_t q = g.index(box.lo[0], j, k);
      for (int i = box.lo[0]; i < box.hi[0]; ++i, ++q) f(i, j, k, q);
    }
  }
}

/// Calls f(q_begin, q_end) for every x-row of the box.
template <class F>
inline void for_each_row(const GridSpec& g, const IndexBox& box, F&& f) {
  for (int k = box.lo[2]; k < box.hi[2]; ++k) {
    for (int j = box.lo[1]; j < box.hi[1]; ++j) {
      const std::size_t q = g.index(box.lo[0], j, k);
      f(q, q + static_cast<std::size_t>(box.hi[0] - box.lo[0]));
    }
  }
}

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double value = 0.0)
      : grid_(grid), values_(grid.padded_size(), value) {}

  const GridSpec& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& at(int i, int j, int k) { return values_[grid_.index(i, j, k)]; }
  double at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }
  double& operator[](std::size_t q) { return values_[q]; }
  double operator[](std::size_t q) const { return values_[q]; }

  bool ghosts_filled() const { return ghosts_filled_; }
  void set_ghosts_filled(bool filled) { ghosts_filled_ = filled; }

  bool operator==(const ScalarField& o) const {
    return grid_ == o.grid_ && values_ == o.values_;
  }

 private:
  GridSpec grid_{};
  std::vector<double> values_;
  bool ghosts_filled_ = false;
};

enum class Placement { faces, edges };

/// Three-component field on faces (velocity, momentum) or edges (vorticity).
template <Placement P>
class StaggeredField {
 public:
  static constexpr Placement placement = P;

  StaggeredField() = default;
  explicit StaggeredField(const GridSpec& grid, double value = 0.0) : grid_(grid) {
    for (auto& c : comp_) c.assign(grid.padded_size(), value);
  }

  const GridSpec& grid() const { return grid_; }
  std::span<double> component(int axis) { return comp_[axis]; }
  std::span<const double> component(int axis) const { return comp_[axis]; }
  double* data(int axis) { return comp_[axis].data(); }
  const double* data(int axis) const { return comp_[axis].data(); }

  double& at(int axis, int i, int j, int k) { return comp_[axis][grid_.index(i, j, k)]; }
  double at(int axis, int i, int j, int k) const { return comp_[axis][grid_.index(i, j, k)]; }

  bool ghosts_filled() const { return ghosts_filled_; }
  void set_ghosts_filled(bool filled) { ghosts_filled_ = filled; }

  bool operator==(const StaggeredField& o) const {
    return grid_ == o.grid_ && comp_ == o.comp_;
  }

 private:
  GridSpec grid_{};
  std::array<std::vector<double>, 3> comp_;
  bool ghosts_filled_ = false;
};

using VectorField = StaggeredField<Placement::faces>;
using EdgeField = StaggeredField<Placement::edges>;

/// Trapezoid weight of a face of component `axis` at normal index i
/// (1/2 on the two wall planes, 1 elsewhere).
inline double face_weight(const GridSpec& g, int axis, int i) {
  return (i == 0 || i == g.cells[axis]) ? 0.5 : 1.0;
}

/// Trapezoid weight of an edge of component `axis` at indices (i,j,k).
double edge_weight(const GridSpec& g, int axis, int i, int j, int k);

}  // namespace slipflow
