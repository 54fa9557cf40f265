// Raw MAC stencil kernels shared by the public operators and the RHS
// assembly. No contract checks here; callers validate.
#pragma once

#include <cmath>
#include <cstddef>

#include "slipflow/grid.hpp"

namespace slipflow::detail {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

/// div on interior cells from face values; faces 0..N along each axis.
inline void divergence_kernel(const GridSpec& g, const double* ux, const double* uy,
                              const double* uz, double* out) {
  const std::ptrdiff_t sx = g.stride(0), sy = g.stride(1), sz = g.stride(2);
  const double ix = 1.0 / g.spacing[0], iy = 1.0 / g.spacing[1], iz = 1.0 / g.spacing[2];
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      out[q] = (ux[q + sx] - ux[q]) * ix + (uy[q + sy] - uy[q]) * iy + (uz[q + sz] - uz[q]) * iz;
    }
  });
}

/// omega_a = d_b u_c - d_c u_b on edges of component a, (a,b,c) cyclic.
inline void curl_kernel(const GridSpec& g, const VectorField& u, EdgeField& w) {
  const auto s = g.strides();
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const double* ub = u.data(b);
    const double* uc = u.data(c);
    double* o = w.data(a);
    const double ib = 1.0 / g.spacing[b], ic = 1.0 / g.spacing[c];
    for_each_row(g, edge_box(g, a), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        o[q] = (uc[q] - uc[q - s[b]]) * ib - (ub[q] - ub[q - s[c]]) * ic;
      }
    });
  }
}

/// Upwind MUSCL face value times face velocity on interior faces; wall faces 0.
inline void muscl_flux_kernel(const GridSpec& g, const double* rho, const VectorField& u,
                              VectorField& flux) {
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double* v = u.data(a);
    double* f = flux.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double vel = v[q];
        const double rl = rho[q - s], rr = rho[q];
        double face;
        if (vel >= 0.0) {
          face = rl + 0.5 * minmod(rl - rho[q - 2 * s], rr - rl);
        } else {
          face = rr - 0.5 * minmod(rr - rl, rho[q + s] - rr);
        }
        f[q] = face * vel;
      }
    });
    // Wall planes.
    IndexBox walls = face_box(g, a, true);
    for (int side = 0; side < 2; ++side) {
      IndexBox plane = walls;
      plane.lo[a] = side == 0 ? 0 : g.cells[a];
      plane.hi[a] = plane.lo[a] + 1;
      for_each_row(g, plane, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) f[q] = 0.0;
      });
    }
  }
}

/// (u . grad) u on interior faces, centred differences, transverse velocity
/// averaged from the four surrounding faces.
inline void convective_kernel(const GridSpec& g, const VectorField& u, VectorField& out) {
  const auto s = g.strides();
  for (int a = 0; a < 3; ++a) {
    const double* ua = u.data(a);
    double* o = out.data(a);
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const double* ub = u.data(b);
    const double* uc = u.data(c);
    const double ha = 0.5 / g.spacing[a], hb = 0.5 / g.spacing[b], hc = 0.5 / g.spacing[c];
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double vb = 0.25 * (ub[q] + ub[q - s[a]] + ub[q + s[b]] + ub[q - s[a] + s[b]]);
        const double vc = 0.25 * (uc[q] + uc[q - s[a]] + uc[q + s[c]] + uc[q - s[a] + s[c]]);
        o[q] = ua[q] * (ua[q + s[a]] - ua[q - s[a]]) * ha + vb * (ua[q + s[b]] - ua[q - s[b]]) * hb +
               vc * (ua[q + s[c]] - ua[q - s[c]]) * hc;
      }
    });
  }
}

}  // namespace slipflow::detail
