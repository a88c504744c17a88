#pragma once

#include <vector>

#include "stocp/problem.hpp"
#include "stocp/time_grid.hpp"

namespace stocp {

struct LtvCoefficients;

// Packed storage for symmetric matrices: lower triangle, column major.
inline int sym_pack_size(int n) { return n * (n + 1) / 2; }
inline int sym_pack_index(int n, int r, int c) {
  if (r < c) std::swap(r, c);
  return c * n - c * (c - 1) / 2 + (r - c);
}
Vec sym_pack(const Mat& s);
Mat sym_unpack(int n, const Vec& p);

// Linear operator S -> A S + S A^T expressed on packed coordinates.
Mat lyapunov_packed(const Mat& a);

// One SCP iterate: controls on the first N-1 nodes plus mean / deterministic
// block / covariance trajectories on the full grid.
struct Iterate {
  std::vector<Vec> u;
  std::vector<Vec> mu;
  std::vector<Vec> z;
  std::vector<Mat> Sigma;

  int nodes() const { return static_cast<int>(mu.size()); }
  // Symmetry within 1e-12 and min eigenvalue >= -1e-10 at every node.
  bool covariances_valid(double sym_tol = 1e-12, double eig_tol = -1e-10) const;
};

// Forward-Euler transcription of the mean/covariance dynamics in matrix form:
//   mu'  = Phi mu + Lam z + Gam u + gam
//   z'   = Phiz z + Gamz u + gamz
//   Sig' = Msig Sig + Zsig z + csig    (packed coordinates)
struct DiscreteLtv {
  TimeGrid grid;
  int n_x = 0, n_z = 0, m = 0;
  std::vector<Mat> Phi, Lam, Gam;
  std::vector<Vec> gam;
  std::vector<Mat> Phiz, Gamz;
  std::vector<Vec> gamz;
  std::vector<Mat> Msig, Zsig;
  std::vector<Vec> csig;

  Iterate rollout(const std::vector<Vec>& controls, const Vec& x0, const Vec& z0) const;
};

// Forward Euler on the linearized moment dynamics. The covariance update uses
// the frozen first factor: Sigma' = Sigma + h (A Sigma + Sigma A^T
// + Sym(C0 C(z)^T)) with C(z) affine about the reference z.
Iterate propagate(const LtvCoefficients& coeffs, const std::vector<Vec>& controls,
                  const Vec& x0, const Vec& z0, const TimeGrid& grid);

DiscreteLtv discretize(const LtvCoefficients& coeffs, const TimeGrid& grid);

}  // namespace stocp
