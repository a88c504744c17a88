#pragma once

#include <vector>

#include "stocp/moments.hpp"
#include "stocp/problem.hpp"
#include "stocp/time_grid.hpp"

namespace stocp {

// Time-varying linearization of the drifts and diffusion about a reference
// iterate (u_k, mu_k, z_k). At node i the x-drift is modeled as
//   A_i x + Az_i z + Bmap_i u + b_off_i
// and the diffusion as sigma(t, z) ~ C0_i + sum_j Cz_i[j] (z_j - z_ref_i[j]),
// affine in z. Az is the cross-Jacobian d b^x / dz; it carries all coupling
// from the deterministic block into the mean dynamics.
struct LtvCoefficients {
  TimeGrid grid;
  int n_x = 0, n_z = 0, m = 0, d = 0;
  std::vector<Mat> A, Az, Bmap;
  std::vector<Vec> b_off;
  std::vector<Mat> D, Emap;
  std::vector<Vec> e_off;
  std::vector<Mat> C0;
  std::vector<std::vector<Mat>> Cz;
  std::vector<Vec> z_ref;

  Vec drift_x_lin(int i, const Vec& u, const Vec& x, const Vec& z) const {
    return A[i] * x + Az[i] * z + Bmap[i] * u + b_off[i];
  }
  Vec drift_z_lin(int i, const Vec& u, const Vec& z) const {
    return D[i] * z + Emap[i] * u + e_off[i];
  }
  Mat diffusion_lin(int i, const Vec& z) const {
    Mat c = C0[i];
    for (int j = 0; j < n_z; ++j) c += Cz[i][j] * (z(j) - z_ref[i](j));
    return c;
  }
};

// First-order model of the running state cost L0 about mu_k.
struct LinearizedCost {
  std::vector<double> value;  // L0(t_i, mu_k_i)
  std::vector<Vec> grad;      // dL0/dx at (t_i, mu_k_i)
  double variance_weight = 1.0;
};

std::pair<LtvCoefficients, LinearizedCost> linearize(const OcpInstance& inst,
                                                     const Iterate& ref,
                                                     const TimeGrid& grid);

// Worst relative error of the instance's analytic Jacobians against central
// finite differences at one point. Instances without analytic derivatives
// have nothing to audit and score 0.
double check_jacobians(const OcpInstance& inst, double t, const Vec& u, const Vec& x,
                       const Vec& z, double step);

// Central finite-difference helpers shared by the fallback path and tests.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, double step);

}  // namespace stocp
