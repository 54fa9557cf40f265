#include "slipflow/elliptic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"
#include "stencil.hpp"

namespace slipflow {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Interior-face box of component `axis` (walls excluded).
IndexBox unknown_box(const GridSpec& g, int axis) { return face_box(g, axis, false); }

}  // namespace

SolveStats conjugate_gradient(const LinearMap& op, const LinearMap& precond,
                              std::span<const double> b, std::span<double> x, double tol,
                              int max_iter, bool keep_history) {
  const std::size_t n = b.size();
  if (x.size() != n) throw ContractViolation("conjugate_gradient: size mismatch");
  SolveStats st;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  std::vector<double> r(n), z(n), p(n), ap(n);
  op(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  auto apply_m = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (precond) {
      precond(in, out);
    } else {
      out = in;
    }
  };
  apply_m(r, z);
  p = z;
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));
  if (keep_history) st.history.push_back(std::sqrt(std::max(rz, 0.0)));
  while (rnorm > tol * bnorm && st.iterations < max_iter) {
    op(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;  // breakdown: operator not SPD on this subspace
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++st.iterations;
    rnorm = std::sqrt(dot(r, r));
    apply_m(r, z);
    const double rz_new = dot(r, z);
    if (keep_history) st.history.push_back(std::sqrt(std::max(rz_new, 0.0)));
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.final_residual = rnorm / bnorm;
  st.converged = rnorm <= tol * bnorm;
  return st;
}

void apply_dirichlet_laplacian(const GridSpec& g, int axis, const double* in, double* out) {
  std::fill(out, out + g.padded_size(), 0.0);
  const auto s = g.strides();
  std::array<double, 3> ih2{};
  for (int d = 0; d < 3; ++d) ih2[d] = 1.0 / (g.spacing[d] * g.spacing[d]);
  for_each_index(g, unknown_box(g, axis), [&](int i, int j, int k, std::size_t q) {
    const std::array<int, 3> idx{i, j, k};
    const double x = in[q];
    double acc = 0.0;
    for (int d = 0; d < 3; ++d) {
      double lo, hi;
      if (d == axis) {
        lo = idx[d] - 1 == 0 ? 0.0 : in[q - s[d]];
        hi = idx[d] + 1 == g.cells[d] ? 0.0 : in[q + s[d]];
      } else {
        lo = idx[d] == 0 ? -x : in[q - s[d]];
        hi = idx[d] == g.cells[d] - 1 ? -x : in[q + s[d]];
      }
      acc += (2.0 * x - lo - hi) * ih2[d];
    }
    out[q] = acc;
  });
}

std::vector<double> dirichlet_laplacian_diagonal(const GridSpec& g, int axis) {
  std::vector<double> diag(g.padded_size(), 0.0);
  for_each_index(g, unknown_box(g, axis), [&](int i, int j, int k, std::size_t q) {
    const std::array<int, 3> idx{i, j, k};
    double acc = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double ih2 = 1.0 / (g.spacing[d] * g.spacing[d]);
      acc += 2.0 * ih2;
      if (d != axis) {
        if (idx[d] == 0) acc += ih2;
        if (idx[d] == g.cells[d] - 1) acc += ih2;
      }
    }
    diag[q] = acc;
  });
  return diag;
}

// Sine-transform diagonalization of the Dirichlet Laplacian, one plan pair per
// face component. Along the component's own axis the unknowns sit on interior
// nodes (DST-I); across it they are cell centred with the wall halfway to the
// ghost (DST-II forward, DST-III back).
struct StokesSolver::Plans {
  struct Component {
    std::array<int, 3> n{};  // transform sizes, x fastest
    double* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::vector<double> inv_eig;  // 1 / (eigenvalue * normalization)
  };
  std::array<Component, 3> comp;

  ~Plans() {
    for (auto& c : comp) {
      if (c.fwd) fftw_destroy_plan(c.fwd);
      if (c.bwd) fftw_destroy_plan(c.bwd);
      if (c.buf) fftw_free(c.buf);
    }
  }
};

StokesSolver::StokesSolver(const GridSpec& grid, StokesOptions opts)
    : grid_(grid), opts_(opts), plans_(std::make_unique<Plans>()), gq_(grid), bq_(grid) {
  if (!(opts_.tol > 0.0)) throw ConfigError("elliptic.tol", "must be positive");
  if (opts_.max_iter < 1) throw ConfigError("elliptic.max_iter", "must be >= 1");
  for (int a = 0; a < 3; ++a) {
    auto& c = plans_->comp[a];
    for (int d = 0; d < 3; ++d) c.n[d] = d == a ? grid.cells[d] - 1 : grid.cells[d];
    const std::size_t total = static_cast<std::size_t>(c.n[0]) * c.n[1] * c.n[2];
    c.buf = fftw_alloc_real(total);
    std::fill(c.buf, c.buf + total, 0.0);
    fftw_r2r_kind fk[3], bk[3];
    // FFTW is row-major, so the slowest dimension (z) comes first.
    for (int d = 0; d < 3; ++d) {
      fk[2 - d] = d == a ? FFTW_RODFT00 : FFTW_RODFT10;
      bk[2 - d] = d == a ? FFTW_RODFT00 : FFTW_RODFT01;
    }
    const int dims[3] = {c.n[2], c.n[1], c.n[0]};
    c.fwd = fftw_plan_r2r(3, dims, c.buf, c.buf, fk, FFTW_ESTIMATE);
    c.bwd = fftw_plan_r2r(3, dims, c.buf, c.buf, bk, FFTW_ESTIMATE);
    if (!c.fwd || !c.bwd) throw Error("StokesSolver: FFTW plan creation failed");
    std::array<std::vector<double>, 3> eig;
    double norm = 1.0;
    for (int d = 0; d < 3; ++d) {
      const double ih2 = 1.0 / (grid.spacing[d] * grid.spacing[d]);
      eig[d].resize(c.n[d]);
      for (int k = 0; k < c.n[d]; ++k) {
        eig[d][k] = (2.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / grid.cells[d])) * ih2;
      }
      norm *= 2.0 * grid.cells[d];
    }
    c.inv_eig.resize(total);
    std::size_t idx = 0;
    for (int k = 0; k < c.n[2]; ++k)
      for (int j = 0; j < c.n[1]; ++j)
        for (int i = 0; i < c.n[0]; ++i)
          c.inv_eig[idx++] = 1.0 / ((eig[0][i] + eig[1][j] + eig[2][k]) * norm);
  }
  if (opts_.inner == InnerSolver::cg) {
    for (int a = 0; a < 3; ++a) diag_.push_back(dirichlet_laplacian_diagonal(grid, a));
  }
}

StokesSolver::~StokesSolver() = default;

void StokesSolver::laplacian_solve(int axis, const double* b, double* x) {
  auto& c = plans_->comp[axis];
  const GridSpec& g = grid_;
  const int off = axis == 0 ? 1 : 0;
  const int offy = axis == 1 ? 1 : 0;
  const int offz = axis == 2 ? 1 : 0;
  std::size_t idx = 0;
  for (int k = 0; k < c.n[2]; ++k)
    for (int j = 0; j < c.n[1]; ++j) {
      const std::size_t q = g.index(off, j + offy, k + offz);
      for (int i = 0; i < c.n[0]; ++i) c.buf[idx++] = b[q + i];
    }
  fftw_execute(c.fwd);
  const std::size_t total = c.inv_eig.size();
  for (std::size_t i = 0; i < total; ++i) c.buf[i] *= c.inv_eig[i];
  fftw_execute(c.bwd);
  std::fill(x, x + g.padded_size(), 0.0);
  idx = 0;
  for (int k = 0; k < c.n[2]; ++k)
    for (int j = 0; j < c.n[1]; ++j) {
      const std::size_t q = g.index(off, j + offy, k + offz);
      for (int i = 0; i < c.n[0]; ++i) x[q + i] = c.buf[idx++];
    }
}

void StokesSolver::velocity_solve(int axis, const double* b, double* x) {
  if (opts_.inner == InnerSolver::spectral) {
    laplacian_solve(axis, b, x);
    return;
  }
  const GridSpec& g = grid_;
  const std::size_t n = g.padded_size();
  const std::vector<double>& dg = diag_[axis];
  LinearMap op = [&](std::span<const double> in, std::span<double> out) {
    apply_dirichlet_laplacian(g, axis, in.data(), out.data());
  };
  LinearMap jacobi = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = dg[i] > 0.0 ? in[i] / dg[i] : 0.0;
  };
  std::fill(x, x + n, 0.0);
  const SolveStats st = conjugate_gradient(op, jacobi, std::span<const double>(b, n),
                                           std::span<double>(x, n), opts_.inner_tol,
                                           opts_.inner_max_iter);
  if (!st.converged && st.final_residual > 1e3 * opts_.inner_tol) {
    throw NumericalBlowup("inner velocity solve stalled");
  }
}

void StokesSolver::schur_apply(std::span<const double> q, std::span<double> out) {
  // S q = -D A^{-1} G q.
  const GridSpec& g = grid_;
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double ih = 1.0 / g.spacing[a];
    double* gq = gq_.data(a);
    for_each_row(g, unknown_box(g, a), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) gq[i] = (q[i] - q[i - s]) * ih;
    });
    velocity_solve(a, gq, bq_.data(a));
  }
  std::fill(out.begin(), out.end(), 0.0);
  detail::divergence_kernel(g, bq_.data(0), bq_.data(1), bq_.data(2), out.data());
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = -out[i];
  });
}

StokesResult StokesSolver::solve(const ScalarField& f) {
  const GridSpec& g = grid_;
  if (!(f.grid() == g)) throw ContractViolation("StokesSolver::solve: grid mismatch");
  StokesResult res{VectorField(g), ScalarField(g), {}, 0.0};
  res.B.set_ghosts_filled(false);

  CompensatedSum total, total_abs;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      total.add(f[q]);
      total_abs.add(std::abs(f[q]));
    }
  });
  const double vol = g.cell_volume();
  const double integral = total.value() * vol;
  if (std::abs(integral) > 1e-10 * (1.0 + total_abs.value() * vol)) {
    throw CompatibilityError("solve_stokes_dirichlet: int f = " + std::to_string(integral) +
                             " is not zero");
  }

  // Exactly mean-free right-hand side on interior cells, zero elsewhere.
  std::vector<double> rhs(g.padded_size(), 0.0);
  const double mean = total.value() / static_cast<double>(g.interior_cells());
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) rhs[q] = f[q] - mean;
  });

  std::vector<double> q(g.padded_size(), 0.0);
  LinearMap schur = [&](std::span<const double> in, std::span<double> out) {
    schur_apply(in, out);
  };
  // Stop a little below the target so the recomputed residual also meets it.
  res.stats = conjugate_gradient(schur, LinearMap{}, rhs, q, 0.5 * opts_.tol, opts_.max_iter,
                                 opts_.keep_history);

  // Mean-zero pressure.
  {
    CompensatedSum qs;
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) qs.add(q[i]);
    });
    const double qm = qs.value() / static_cast<double>(g.interior_cells());
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) res.q[i] = q[i] - qm;
    });
  }

  // B = -A^{-1} G q.
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double ih = 1.0 / g.spacing[a];
    double* gq = gq_.data(a);
    std::fill(gq, gq + g.padded_size(), 0.0);
    for_each_row(g, unknown_box(g, a), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) gq[i] = -(q[i] - q[i - s]) * ih;
    });
    velocity_solve(a, gq, res.B.data(a));
  }
  fill_vector_ghosts(res.B);

  // Recomputed divergence residual.
  std::vector<double> dv(g.padded_size(), 0.0);
  detail::divergence_kernel(g, res.B.data(0), res.B.data(1), res.B.data(2), dv.data());
  CompensatedSum r2, f2;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = dv[i] - f[i];
      r2.add(d * d);
      f2.add(f[i] * f[i]);
    }
  });
  res.divergence_residual = f2.value() > 0.0 ? std::sqrt(r2.value() / f2.value()) : 0.0;
  res.stats.converged = res.divergence_residual <= opts_.tol;
  if (f2.value() == 0.0) res.stats.final_residual = 0.0;
  return res;
}

StokesResult solve_stokes_dirichlet(const ScalarField& f, double tol, int max_iter) {
  StokesOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  StokesSolver solver(f.grid(), opts);
  return solver.solve(f);
}

double dirichlet_gradient_norm(const VectorField& B) {
  const GridSpec& g = B.grid();
  std::vector<double> ab(g.padded_size());
  CompensatedSum s;
  for (int a = 0; a < 3; ++a) {
    apply_dirichlet_laplacian(g, a, B.data(a), ab.data());
    const double* b = B.data(a);
    for_each_row(g, unknown_box(g, a), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) s.add(b[q] * ab[q]);
    });
  }
  return std::sqrt(std::max(s.value(), 0.0) * g.cell_volume());
}

Pairing bogovskii_pairing(const FlowState& state, StokesSolver& solver) {
  const GridSpec& g = state.grid();
  ScalarField f(g);
  const double mean = interior_mean(state.rho);
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) f[q] = state.rho[q] - mean;
  });
  Pairing out;
  StokesResult sol = solver.solve(f);
  out.stats = std::move(sol.stats);
  out.value = inner(state.mom, sol.B);
  out.grad_norm = dirichlet_gradient_norm(sol.B);
  return out;
}

double bogovskii_pairing(const FlowState& state, double tol) {
  StokesOptions opts;
  opts.tol = tol;
  StokesSolver solver(state.grid(), opts);
  return bogovskii_pairing(state, solver).value;
}

}  // namespace slipflow
