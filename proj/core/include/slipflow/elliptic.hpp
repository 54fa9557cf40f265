/// @file elliptic.hpp
/// @brief Conjugate gradients, the Dirichlet vector Laplacian on faces and the
/// Stokes saddle-point solve that realizes a Bogovskii operator B[f]:
/// div B = f in the box, B = 0 on the walls.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "slipflow/grid.hpp"
#include "slipflow/state.hpp"

namespace slipflow {

struct SolveStats {
  int iterations = 0;
  double final_residual = 0.0;  ///< ||r|| / ||b|| at exit
  bool converged = false;
  /// sqrt(r.z) at the start and after each iteration, when requested.
  std::vector<double> history;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Preconditioned CG for an SPD operator. Stops when ||r||_2 <= tol ||b||_2.
/// `precond` may be empty (identity). x holds the initial guess on entry.
SolveStats conjugate_gradient(const LinearMap& op, const LinearMap& precond,
                              std::span<const double> b, std::span<double> x, double tol,
                              int max_iter, bool keep_history = false);

/// -Lap B on interior faces of component `axis`, with B = 0 on the walls:
/// normal neighbours at the wall planes are 0, tangential ghosts are
/// antisymmetric. Reads and writes padded arrays; non-interior output is 0.
void apply_dirichlet_laplacian(const GridSpec& g, int axis, const double* in, double* out);

/// Diagonal of the operator above at each interior face (0 elsewhere).
std::vector<double> dirichlet_laplacian_diagonal(const GridSpec& g, int axis);

enum class InnerSolver { spectral, cg };

struct StokesOptions {
  double tol = 1e-8;
  int max_iter = 400;
  /// Velocity solves inside the Schur iteration: exact sine transforms, or
  /// Jacobi-preconditioned CG to inner_tol.
  InnerSolver inner = InnerSolver::spectral;
  double inner_tol = 1e-13;
  int inner_max_iter = 5000;
  bool keep_history = false;
};

struct StokesResult {
  VectorField B;   ///< zero on every wall face
  ScalarField q;   ///< mean zero
  SolveStats stats;
  /// ||div B - f||_2 / ||f||_2 recomputed from B (0 when f = 0).
  double divergence_residual = 0.0;
};

/// Schur-complement CG for  -Lap B + grad q = 0, div B = f, B = 0 on the walls.
/// Holds transform plans and scratch for one grid.
class StokesSolver {
 public:
  explicit StokesSolver(const GridSpec& grid, StokesOptions opts = {});
  ~StokesSolver();
  StokesSolver(const StokesSolver&) = delete;
  StokesSolver& operator=(const StokesSolver&) = delete;

  /// Throws CompatibilityError when |int f| > 1e-10 (1 + int |f|).
  StokesResult solve(const ScalarField& f);

  /// Exact solve of -Lap_D x = b for one face component (sine transforms).
  void laplacian_solve(int axis, const double* b, double* x);

  const GridSpec& grid() const { return grid_; }
  const StokesOptions& options() const { return opts_; }

 private:
  struct Plans;
  void velocity_solve(int axis, const double* b, double* x);
  void schur_apply(std::span<const double> q, std::span<double> out);

  GridSpec grid_;
  StokesOptions opts_;
  std::unique_ptr<Plans> plans_;
  VectorField gq_, bq_;
  std::vector<std::vector<double>> diag_;
};

StokesResult solve_stokes_dirichlet(const ScalarField& f, double tol = 1e-8, int max_iter = 400);

/// ||grad B||_2 of a face field vanishing on the walls: sqrt(<B, -Lap_D B>).
double dirichlet_gradient_norm(const VectorField& B);

/// Result of the M1 cross term int rho u . B[rho - mean rho] dx (m = rho u is
/// read directly from the state).
struct Pairing {
  double value = 0.0;
  SolveStats stats;
  double grad_norm = 0.0;  ///< ||grad B||_2 of the solution used
};
Pairing bogovskii_pairing(const FlowState& state, StokesSolver& solver);
double bogovskii_pairing(const FlowState& state, double tol = 1e-8);

}  // namespace slipflow
