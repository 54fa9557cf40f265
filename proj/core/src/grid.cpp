#include "slipflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slipflow/errors.hpp"

namespace slipflow {

double GridSpec::min_spacing() const { return std::min({spacing[0], spacing[1], spacing[2]}); }

GridSpec build_grid(std::array<double, 3> extent, std::array<int, 3> cells, int ghost_width) {
  static constexpr const char* axis_names[3] = {"x", "y", "z"};
  GridSpec g;
  for (int a = 0; a < 3; ++a) {
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) {
      throw ConfigError(std::string("grid.extent.") + axis_names[a], "extent must be positive");
    }
    if (cells[a] < 4) {
      throw ConfigError(std::string("grid.cells.") + axis_names[a],
                        "at least 4 cells required, got " + std::to_string(cells[a]));
    }
  }
  if (ghost_width < 1) throw ConfigError("grid.ghost", "ghost width must be >= 1");
  g.extent = extent;
  g.cells = cells;
  g.ghost = ghost_width;
  for (int a = 0; a < 3; ++a) g.spacing[a] = extent[a] / cells[a];
  return g;
}

IndexBox cell_box(const GridSpec& g) { return {{0, 0, 0}, g.cells}; }

IndexBox face_box(const GridSpec& g, int axis, bool include_walls) {
  IndexBox b{{0, 0, 0}, g.cells};
  if (include_walls) {
    b.hi[axis] = g.cells[axis] + 1;
  } else {
    b.lo[axis] = 1;
  }
  return b;
}

IndexBox edge_box(const GridSpec& g, int axis) {
  IndexBox b{{0, 0, 0}, g.cells};
  for (int d = 0; d < 3; ++d) {
    if (d != axis) b.hi[d] = g.cells[d] + 1;
  }
  return b;
}

double edge_weight(const GridSpec& g, int axis, int i, int j, int k) {
  const std::array<int, 3> idx{i, j, k};
  double w = 1.0;
  for (int d = 0; d < 3; ++d) {
    if (d == axis) continue;
    if (idx[d] == 0 || idx[d] == g.cells[d]) w *= 0.5;
  }
  return w;
}

}  // namespace slipflow
