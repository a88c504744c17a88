#pragma once

#include <vector>

#include "stocp/linearize.hpp"
#include "stocp/moments.hpp"

namespace stocp {

// Costate of the deterministic mean surrogate on the combined (x, z) state.
// The abnormal multiplier is fixed to -1 (normal extremal); the martingale
// term of the stochastic adjoint is out of scope, so outputs are labeled
// "surrogate".
struct AdjointTrajectory {
  std::vector<Vec> p;      // N entries, dimension n_x + n_z
  Vec terminal_multiplier; // p-frak
  double p0 = -1.0;
};

// Backward recursion p_i = p_{i+1} + h (Ahat_i^T p_{i+1} + p0 grad f0_i) with
// terminal condition p_{N-1} = p-frak; Ahat is the combined block Jacobian
// [[A, Az], [0, D]].
AdjointTrajectory backward_adjoint(const LtvCoefficients& coeffs, const LinearizedCost& lin_cost,
                                   const Vec& terminal_multiplier);

struct MaximalityReport {
  bool available = false;  // false for non-quadratic G
  double residual = 0.0;   // max_i |u_i - Pi_U(u*_i)|
};

// Closed-form Hamiltonian argmax over the control box for G(u) = |u|^2:
// u*_i = Pi_U( Bhat_i^T p_{i+1} / 2 ). Small residuals indicate the control
// satisfies the surrogate maximality condition.
MaximalityReport maximality_residual(const AdjointTrajectory& adj, const Iterate& iterate,
                                     const OcpInstance& inst, const LtvCoefficients& coeffs,
                                     const TimeGrid& grid);

}  // namespace stocp
