#include "stocp/moments.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>
#include <stdexcept>

#include "stocp/linearize.hpp"

namespace stocp {

Vec sym_pack(const Mat& s) {
  const int n = static_cast<int>(s.rows());
  Vec p(sym_pack_size(n));
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) p(sym_pack_index(n, r, c)) = s(r, c);
  return p;
}

Mat sym_unpack(int n, const Vec& p) {
  Mat s(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) {
      s(r, c) = p(sym_pack_index(n, r, c));
      s(c, r) = s(r, c);
    }
  return s;
}

Mat lyapunov_packed(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  const int s = sym_pack_size(n);
  Mat op = Mat::Zero(s, s);
  for (int c = 0; c < n; ++c) {
    for (int r = c; r < n; ++r) {
      const int row = sym_pack_index(n, r, c);
      for (int k = 0; k < n; ++k) {
        op(row, sym_pack_index(n, k, c)) += a(r, k);  // (A S)_{rc}
        op(row, sym_pack_index(n, r, k)) += a(c, k);  // (S A^T)_{rc}
      }
    }
  }
  return op;
}

bool Iterate::covariances_valid(double sym_tol, double eig_tol) const {
  for (const Mat& s : Sigma) {
    if ((s - s.transpose()).lpNorm<Eigen::Infinity>() >= sym_tol) return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
    if (es.eigenvalues().minCoeff() < eig_tol) return false;
  }
  return true;
}

Iterate propagate(const LtvCoefficients& co, const std::vector<Vec>& controls, const Vec& x0,
                  const Vec& z0, const TimeGrid& grid) {
  const int n = grid.nodes;
  const double h = grid.step();
  if (static_cast<int>(controls.size()) < n - 1)
    throw std::invalid_argument("propagate: controls must cover the first N-1 nodes");

  Iterate it;
  it.u.assign(controls.begin(), controls.begin() + (n - 1));
  it.mu.resize(n);
  it.z.resize(n);
  it.Sigma.resize(n);
  it.mu[0] = x0;
  it.z[0] = z0;
  it.Sigma[0] = Mat::Zero(co.n_x, co.n_x);

  for (int i = 0; i + 1 < n; ++i) {
    const Vec& u = controls[i];
    it.mu[i + 1] = it.mu[i] + h * co.drift_x_lin(i, u, it.mu[i], it.z[i]);
    it.z[i + 1] = it.z[i] + h * co.drift_z_lin(i, u, it.z[i]);
    const Mat cz = co.diffusion_lin(i, it.z[i]);
    const Mat prod = co.C0[i] * cz.transpose();
    const Mat sym = 0.5 * (prod + prod.transpose());
    it.Sigma[i + 1] =
        it.Sigma[i] + h * (co.A[i] * it.Sigma[i] + it.Sigma[i] * co.A[i].transpose() + sym);
    if (!it.mu[i + 1].allFinite() || !it.z[i + 1].allFinite() || !it.Sigma[i + 1].allFinite()) {
      std::ostringstream msg;
      msg << "propagate: non-finite state at node " << i + 1;
      throw std::runtime_error(msg.str());
    }
  }
  return it;
}

DiscreteLtv discretize(const LtvCoefficients& co, const TimeGrid& grid) {
  const int n = grid.nodes;
  const double h = grid.step();
  const int nx = co.n_x, nz = co.n_z;
  const int s = sym_pack_size(nx);

  DiscreteLtv d;
  d.grid = grid;
  d.n_x = nx;
  d.n_z = nz;
  d.m = co.m;
  d.Phi.resize(n - 1);
  d.Lam.resize(n - 1);
  d.Gam.resize(n - 1);
  d.gam.resize(n - 1);
  d.Phiz.resize(n - 1);
  d.Gamz.resize(n - 1);
  d.gamz.resize(n - 1);
  d.Msig.resize(n - 1);
  d.Zsig.resize(n - 1);
  d.csig.resize(n - 1);

  for (int i = 0; i + 1 < n; ++i) {
    d.Phi[i] = Mat::Identity(nx, nx) + h * co.A[i];
    d.Lam[i] = h * co.Az[i];
    d.Gam[i] = h * co.Bmap[i];
    d.gam[i] = h * co.b_off[i];
    d.Phiz[i] = Mat::Identity(nz, nz) + h * co.D[i];
    d.Gamz[i] = h * co.Emap[i];
    d.gamz[i] = h * co.e_off[i];

    d.Msig[i] = Mat::Identity(s, s) + h * lyapunov_packed(co.A[i]);
    // Sym(C0 C(z)^T) split into its constant and z-linear parts.
    Mat zsig = Mat::Zero(s, nz);
    const Mat base = co.C0[i] * co.C0[i].transpose();
    Vec csig = h * sym_pack(base);
    for (int j = 0; j < nz; ++j) {
      const Mat pj = co.C0[i] * co.Cz[i][j].transpose();
      const Vec packed = h * sym_pack(0.5 * (pj + pj.transpose()));
      zsig.col(j) = packed;
      csig -= packed * co.z_ref[i](j);
    }
    d.Zsig[i] = zsig;
    d.csig[i] = csig;
  }
  return d;
}

Iterate DiscreteLtv::rollout(const std::vector<Vec>& controls, const Vec& x0,
                             const Vec& z0) const {
  const int n = grid.nodes;
  if (static_cast<int>(controls.size()) < n - 1)
    throw std::invalid_argument("rollout: controls must cover the first N-1 nodes");

  Iterate it;
  it.u.assign(controls.begin(), controls.begin() + (n - 1));
  it.mu.resize(n);
  it.z.resize(n);
  it.Sigma.resize(n);
  it.mu[0] = x0;
  it.z[0] = z0;
  Vec sig = Vec::Zero(sym_pack_size(n_x));
  it.Sigma[0] = sym_unpack(n_x, sig);
  for (int i = 0; i + 1 < n; ++i) {
    it.mu[i + 1] = Phi[i] * it.mu[i] + Lam[i] * it.z[i] + Gam[i] * controls[i] + gam[i];
    it.z[i + 1] = Phiz[i] * it.z[i] + Gamz[i] * controls[i] + gamz[i];
    sig = Msig[i] * sig + Zsig[i] * it.z[i] + csig[i];
    it.Sigma[i + 1] = sym_unpack(n_x, sig);
  }
  return it;
}

}  // namespace stocp
