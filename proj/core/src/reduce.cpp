#include "slipflow/reduce.hpp"

namespace slipflow {

double interior_sum(const ScalarField& f) {
  CompensatedSum s;
  const double* v = f.data();
  for_each_row(f.grid(), cell_box(f.grid()), [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) s.add(v[q]);
  });
  return s.value();
}

double integrate(const ScalarField& f) { return interior_sum(f) * f.grid().cell_volume(); }

double inner(const ScalarField& a, const ScalarField& b) {
  CompensatedSum s;
  const double* x = a.data();
  const double* y = b.data();
  for_each_row(a.grid(), cell_box(a.grid()), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) s.add(x[q] * y[q]);
  });
  return s.value() * a.grid().cell_volume();
}

double inner(const VectorField& a, const VectorField& b) {
  const GridSpec& g = a.grid();
  CompensatedSum s;
  for (int c = 0; c < 3; ++c) {
    const double* x = a.data(c);
    const double* y = b.data(c);
    for_each_index(g, face_box(g, c, true), [&](int i, int j, int k, std::size_t q) {
      const int n = c == 0 ? i : (c == 1 ? j : k);
      s.add(face_weight(g, c, n) * x[q] * y[q]);
    });
  }
  return s.value() * g.cell_volume();
}

double inner(const EdgeField& a, const EdgeField& b) {
  const GridSpec& g = a.grid();
  CompensatedSum s;
  for (int c = 0; c < 3; ++c) {
    const double* x = a.data(c);
    const double* y = b.data(c);
    const IndexBox box = edge_box(g, c);
    for (int k = box.lo[2]; k < box.hi[2]; ++k) {
      for (int j = box.lo[1]; j < box.hi[1]; ++j) {
        // Weight of the row apart from the x factor; edge_weight() with i
        // inside the box gives exactly that.
        const double wr = edge_weight(g, c, 1, j, k);
        std::size_t q = g.index(box.lo[0], j, k);
        for (int i = box.lo[0]; i < box.hi[0]; ++i, ++q) {
          const double w = (c != 0 && (i == 0 || i == g.cells[0])) ? 0.5 * wr : wr;
          s.add(w * x[q] * y[q]);
        }
      }
    }
  }
  return s.value() * g.cell_volume();
}

}  // namespace slipflow
