#include "stocp/pmp.hpp"

#include <stdexcept>

namespace stocp {

AdjointTrajectory backward_adjoint(const LtvCoefficients& coeffs, const LinearizedCost& lin_cost,
                                   const Vec& terminal_multiplier) {
  const int n = coeffs.grid.nodes;
  const int nx = coeffs.n_x, nz = coeffs.n_z;
  const double h = coeffs.grid.step();
  if (terminal_multiplier.size() != nx + nz)
    throw std::invalid_argument("backward_adjoint: terminal multiplier must have size n_x + n_z");

  AdjointTrajectory adj;
  adj.terminal_multiplier = terminal_multiplier;
  adj.p.resize(n);
  adj.p[n - 1] = terminal_multiplier;
  for (int i = n - 2; i >= 0; --i) {
    Mat ahat = Mat::Zero(nx + nz, nx + nz);
    ahat.topLeftCorner(nx, nx) = coeffs.A[i];
    ahat.topRightCorner(nx, nz) = coeffs.Az[i];
    ahat.bottomRightCorner(nz, nz) = coeffs.D[i];
    Vec grad = Vec::Zero(nx + nz);  // L0 depends on x only
    grad.head(nx) = lin_cost.grad[i];
    adj.p[i] = adj.p[i + 1] + h * (ahat.transpose() * adj.p[i + 1] + adj.p0 * grad);
  }
  return adj;
}

MaximalityReport maximality_residual(const AdjointTrajectory& adj, const Iterate& iterate,
                                     const OcpInstance& inst, const LtvCoefficients& coeffs,
                                     const TimeGrid& grid) {
  MaximalityReport rep;
  if (!inst.quadratic_control_cost) return rep;  // no closed-form argmax
  rep.available = true;

  const int nx = coeffs.n_x, nz = coeffs.n_z;
  for (int i = 0; i + 1 < grid.nodes; ++i) {
    Mat bhat(nx + nz, coeffs.m);
    bhat.topRows(nx) = coeffs.Bmap[i];
    bhat.bottomRows(nz) = coeffs.Emap[i];
    // argmax_v p^T Bhat v - |v|^2 over the box
    Vec ustar = 0.5 * (bhat.transpose() * adj.p[i + 1]);
    ustar = ustar.cwiseMax(inst.u_lo).cwiseMin(inst.u_hi);
    rep.residual = std::max(rep.residual, (iterate.u[i] - ustar).norm());
  }
  return rep;
}

}  // namespace stocp
