/// @file verify.hpp
/// @brief Quick self-checks of the discrete operators, the relative entropy,
/// the elliptic solver and the inequality probes.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "slipflow/harness/experiments.hpp"
#include "slipflow/operators.hpp"

namespace slipflow::harness {

/// Errors of div, grad, curl, the viscous operator, the vector identity and
/// MUSCL advection against analytic derivatives of smooth slip-compatible
/// fields, with the observed order from the two finest resolutions. The
/// identity report's residual is its distance to the component-wise 7-point
/// Laplacian on the finest grid, relative to that Laplacian.
std::vector<StencilReport> stencil_convergence(const std::vector<int>& cells = {16, 32, 64});

/// Runs every check and returns one assertion per check (a few seconds).
std::vector<Assertion> verify_suite(std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace slipflow::harness
