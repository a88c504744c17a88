#include "stocp/linearize.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stocp {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, double step) {
  const Vec f0 = f(at);
  Mat j(f0.size(), at.size());
  for (Eigen::Index c = 0; c < at.size(); ++c) {
    Vec hi = at, lo = at;
    hi(c) += step;
    lo(c) -= step;
    j.col(c) = (f(hi) - f(lo)) / (2.0 * step);
  }
  return j;
}

namespace {

double fd_step(const Vec& at) { return 1e-5 * std::max(1.0, at.lpNorm<Eigen::Infinity>()); }

// Control columns of an affine-in-u map, exact up to roundoff.
Mat control_columns(const std::function<Vec(const Vec&)>& f, int m) {
  const Vec base = f(Vec::Zero(m));
  Mat cols(base.size(), m);
  for (int j = 0; j < m; ++j) {
    Vec e = Vec::Zero(m);
    e(j) = 1.0;
    cols.col(j) = f(e) - base;
  }
  return cols;
}

void require_finite(const Vec& v, int node, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << "linearize: non-finite " << what << " at node " << node;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

std::pair<LtvCoefficients, LinearizedCost> linearize(const OcpInstance& inst,
                                                     const Iterate& ref,
                                                     const TimeGrid& grid) {
  const int n = grid.nodes;
  if (ref.nodes() != n || static_cast<int>(ref.u.size()) < n - 1)
    throw std::invalid_argument("linearize: reference not defined on the grid");

  LtvCoefficients co;
  co.grid = grid;
  co.n_x = inst.n_x;
  co.n_z = inst.n_z;
  co.m = inst.m;
  co.d = inst.d;
  co.A.resize(n);
  co.Az.resize(n);
  co.Bmap.resize(n);
  co.b_off.resize(n);
  co.D.resize(n);
  co.Emap.resize(n);
  co.e_off.resize(n);
  co.C0.resize(n);
  co.Cz.resize(n);
  co.z_ref.resize(n);

  LinearizedCost lc;
  lc.value.resize(n);
  lc.grad.resize(n);
  lc.variance_weight = inst.variance_weight;

  for (int i = 0; i < n; ++i) {
    const double t = grid.time(i);
    const Vec& mu = ref.mu[i];
    const Vec& z = ref.z[i];
    const Vec& uk = ref.u[std::min(i, n - 2)];
    require_finite(mu, i, "reference mean");
    require_finite(z, i, "reference z");
    require_finite(uk, i, "reference control");

    // Jacobians at the reference control, per the value/Jacobian split of the
    // control-affine linearization.
    co.A[i] = inst.jac_x
                  ? inst.jac_x(t, uk, mu, z)
                  : fd_jacobian([&](const Vec& x) { return inst.drift_x(t, uk, x, z); }, mu,
                                fd_step(mu));
    co.Az[i] = inst.jac_xz
                   ? inst.jac_xz(t, uk, mu, z)
                   : fd_jacobian([&](const Vec& zz) { return inst.drift_x(t, uk, mu, zz); }, z,
                                 fd_step(z));
    co.Bmap[i] = inst.control_map_x
                     ? inst.control_map_x(t, mu, z)
                     : control_columns([&](const Vec& u) { return inst.drift_x(t, u, mu, z); },
                                       inst.m);
    const Vec bx0 = inst.drift_x(t, Vec::Zero(inst.m), mu, z);
    co.b_off[i] = bx0 - co.A[i] * mu - co.Az[i] * z;

    co.D[i] = inst.jac_z
                  ? inst.jac_z(t, uk, z)
                  : fd_jacobian([&](const Vec& zz) { return inst.drift_z(t, uk, zz); }, z,
                                fd_step(z));
    co.Emap[i] = inst.control_map_z
                     ? inst.control_map_z(t, z)
                     : control_columns([&](const Vec& u) { return inst.drift_z(t, u, z); },
                                       inst.m);
    const Vec bz0 = inst.drift_z(t, Vec::Zero(inst.m), z);
    co.e_off[i] = bz0 - co.D[i] * z;

    co.C0[i] = inst.diffusion(t, z);
    co.z_ref[i] = z;
    co.Cz[i].resize(inst.n_z);
    for (int j = 0; j < inst.n_z; ++j) {
      if (inst.diffusion_dz) {
        co.Cz[i][j] = inst.diffusion_dz(t, z, j);
      } else {
        const double s = fd_step(z);
        Vec hi = z, lo = z;
        hi(j) += s;
        lo(j) -= s;
        co.Cz[i][j] = (inst.diffusion(t, hi) - inst.diffusion(t, lo)) / (2.0 * s);
      }
    }

    lc.value[i] = inst.state_penalty(t, mu);
    lc.grad[i] = inst.state_penalty_grad
                     ? inst.state_penalty_grad(t, mu)
                     : fd_jacobian(
                           [&](const Vec& x) {
                             Vec out(1);
                             out(0) = inst.state_penalty(t, x);
                             return out;
                           },
                           mu, fd_step(mu))
                           .row(0)
                           .transpose();
  }
  return {std::move(co), std::move(lc)};
}

namespace {

double rel_err(const Mat& analytic, const Mat& reference) {
  const double scale = std::max(1.0, reference.lpNorm<Eigen::Infinity>());
  return (analytic - reference).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace

double check_jacobians(const OcpInstance& inst, double t, const Vec& u, const Vec& x,
                       const Vec& z, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("check_jacobians: step must be positive");
  double worst = 0.0;
  if (inst.jac_x) {
    const Mat fd = fd_jacobian([&](const Vec& xx) { return inst.drift_x(t, u, xx, z); }, x, step);
    worst = std::max(worst, rel_err(inst.jac_x(t, u, x, z), fd));
  }
  if (inst.jac_xz) {
    const Mat fd = fd_jacobian([&](const Vec& zz) { return inst.drift_x(t, u, x, zz); }, z, step);
    worst = std::max(worst, rel_err(inst.jac_xz(t, u, x, z), fd));
  }
  if (inst.control_map_x) {
    const Mat fd = fd_jacobian([&](const Vec& uu) { return inst.drift_x(t, uu, x, z); }, u, step);
    worst = std::max(worst, rel_err(inst.control_map_x(t, x, z), fd));
  }
  if (inst.jac_z) {
    const Mat fd = fd_jacobian([&](const Vec& zz) { return inst.drift_z(t, u, zz); }, z, step);
    worst = std::max(worst, rel_err(inst.jac_z(t, u, z), fd));
  }
  if (inst.control_map_z) {
    const Mat fd = fd_jacobian([&](const Vec& uu) { return inst.drift_z(t, uu, z); }, u, step);
    worst = std::max(worst, rel_err(inst.control_map_z(t, z), fd));
  }
  if (inst.diffusion_dz) {
    for (int j = 0; j < inst.n_z; ++j) {
      Vec hi = z, lo = z;
      hi(j) += step;
      lo(j) -= step;
      const Mat fd = (inst.diffusion(t, hi) - inst.diffusion(t, lo)) / (2.0 * step);
      worst = std::max(worst, rel_err(inst.diffusion_dz(t, z, j), fd));
    }
  }
  if (inst.state_penalty_grad) {
    const Mat fd = fd_jacobian(
        [&](const Vec& xx) {
          Vec out(1);
          out(0) = inst.state_penalty(t, xx);
          return out;
        },
        x, step);
    worst = std::max(worst, rel_err(inst.state_penalty_grad(t, x).transpose(), fd));
  }
  return worst;
}

}  // namespace stocp
