/// @file operators.hpp
/// @brief Second-order MAC operators: div, grad, curl, viscous operator,
/// MUSCL advection, material acceleration and the effective viscous flux.
///
/// All operators read ghost values and therefore require the input's
/// ghosts_filled() flag; they throw ContractViolation otherwise. Outputs are
/// computed on interior cells, on wall + interior faces (gradient) or on
/// interior faces only (viscous/advective terms; wall-normal entries are 0).
#pragma once

#include <cstddef>
#include <string>

#include "slipflow/eos.hpp"
#include "slipflow/grid.hpp"
#include "slipflow/state.hpp"

namespace slipflow {

struct StencilReport {
  std::string name;
  double observed_order = 0.0;
  double residual = 0.0;
};

/// Observed order from errors on two grids whose spacing differs by `ratio`.
double observed_order(double coarse_error, double fine_error, double ratio = 2.0);

ScalarField divergence(const VectorField& u);
void divergence_into(const VectorField& u, ScalarField& out);

/// Vorticity on edges.
EdgeField curl(const VectorField& u);
void curl_into(const VectorField& u, EdgeField& out);

/// Curl of an edge field, evaluated on interior faces.
VectorField curl_of_edges(const EdgeField& w);

/// Face-centred gradient on wall and interior faces.
VectorField gradient(const ScalarField& p);
void gradient_into(const ScalarField& p, VectorField& out);

/// mu Lap u + (mu + lambda) grad div u, assembled as
/// (2mu + lambda) grad div u - mu curl curl u on interior faces.
VectorField laplacian_vector(const VectorField& u, double mu, double lambda);

/// Upwind MUSCL/minmod mass flux rho_face * u on interior faces (0 on walls).
void mass_flux_into(const ScalarField& rho, const VectorField& u, VectorField& flux);

/// -div(rho u) in flux form; integrates to zero over the box.
ScalarField advect_scalar(const ScalarField& rho, const VectorField& u);

/// (u . grad) u on interior faces with centred differences.
VectorField convective_acceleration(const VectorField& u);

struct MaterialAcceleration {
  VectorField udot;
  /// Faces where rho_f < vacuum floor; u-dot is set to 0 there.
  std::size_t masked_faces = 0;
};

/// u-dot = (u(t) - u(t - dt)) / dt + (u . grad) u at time t.
MaterialAcceleration material_acceleration(const FlowState& prev, const FlowState& curr,
                                           double dt, double vacuum_floor);

/// F = (2mu + lambda) div u - (P - mean P); ghosts filled.
ScalarField effective_viscous_flux(const FlowState& state, const EosParams& eos,
                                   double vacuum_floor);

/// || rho u-dot - grad F + mu curl curl u || / (||rho u-dot|| + ||grad F||), 0 for 0/0.
double momentum_residual(const FlowState& state, const VectorField& udot, const EosParams& eos,
                         double vacuum_floor);

}  // namespace slipflow
