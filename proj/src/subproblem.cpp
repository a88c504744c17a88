#include "stocp/subproblem.hpp"

#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace stocp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void push_block(std::vector<Eigen::Triplet<double>>& trips, int row0, int col0, const Mat& b) {
  for (int r = 0; r < b.rows(); ++r)
    for (int c = 0; c < b.cols(); ++c)
      if (b(r, c) != 0.0) trips.emplace_back(row0 + r, col0 + c, b(r, c));
}

void push_identity(std::vector<Eigen::Triplet<double>>& trips, int row0, int col0, int n,
                   double scale = 1.0) {
  for (int i = 0; i < n; ++i) trips.emplace_back(row0 + i, col0 + i, scale);
}

}  // namespace

Iterate ConvexSubproblem::unpack(const Vec& x) const {
  Iterate it;
  it.u.resize(layout.N - 1);
  it.mu.resize(layout.N);
  it.z.resize(layout.N);
  it.Sigma.resize(layout.N);
  for (int i = 0; i + 1 < layout.N; ++i) it.u[i] = x.segment(layout.u_off(i), layout.m);
  for (int i = 0; i < layout.N; ++i) {
    it.mu[i] = x.segment(layout.mu_off(i), layout.nx);
    it.z[i] = x.segment(layout.z_off(i), layout.nz);
    it.Sigma[i] = sym_unpack(layout.nx, x.segment(layout.sig_off(i), layout.s));
  }
  return it;
}

Vec ConvexSubproblem::pack(const Iterate& it) const {
  Vec x = Vec::Zero(layout.total());
  for (int i = 0; i + 1 < layout.N; ++i) x.segment(layout.u_off(i), layout.m) = it.u[i];
  for (int i = 0; i < layout.N; ++i) {
    x.segment(layout.mu_off(i), layout.nx) = it.mu[i];
    x.segment(layout.z_off(i), layout.nz) = it.z[i];
    x.segment(layout.sig_off(i), layout.s) = sym_pack(it.Sigma[i]);
  }
  return x;
}

ConvexSubproblem build_subproblem(const OcpInstance& inst, const LtvCoefficients& coeffs,
                                  const LinearizedCost& lin_cost, const Iterate& ref,
                                  double delta, const TimeGrid& grid,
                                  const BuildOptions& opts) {
  if (!(delta >= 0.0))
    throw std::invalid_argument("build_subproblem: delta must be non-negative");
  const int N = grid.nodes;
  const double h = grid.step();
  const VarLayout ly(N, inst.m, inst.n_x, inst.n_z);
  const DiscreteLtv dl = discretize(coeffs, grid);

  ConvexSubproblem sp;
  sp.layout = ly;
  sp.grid = grid;
  sp.soft_terminal = opts.soft_terminal;

  Qcqp& p = sp.qcqp;
  p.n = ly.total();

  // Objective. G is quadratic (|u|^2), L0 enters through its first-order
  // model about mu_k, the covariance through variance_weight * tr Sigma.
  std::vector<Eigen::Triplet<double>> ptrips;
  p.q = Vec::Zero(p.n);
  p.obj_const = 0.0;
  for (int i = 0; i + 1 < N; ++i) {
    push_identity(ptrips, ly.u_off(i), ly.u_off(i), ly.m, 2.0 * h);
    p.q.segment(ly.mu_off(i), ly.nx) += h * lin_cost.grad[i];
    p.obj_const += h * (lin_cost.value[i] - lin_cost.grad[i].dot(ref.mu[i]));
    for (int c = 0; c < ly.nx; ++c)
      p.q(ly.sig_off(i) + sym_pack_index(ly.nx, c, c)) += h * lin_cost.variance_weight;
  }
  if (opts.soft_terminal) {
    const double w = opts.soft_terminal_weight;
    push_identity(ptrips, ly.mu_off(N - 1), ly.mu_off(N - 1), ly.nx, 2.0 * w);
    push_identity(ptrips, ly.z_off(N - 1), ly.z_off(N - 1), ly.nz, 2.0 * w);
    p.q.segment(ly.mu_off(N - 1), ly.nx) -= 2.0 * w * inst.goal_x;
    p.q.segment(ly.z_off(N - 1), ly.nz) -= 2.0 * w * inst.goal_z;
    p.obj_const += w * (inst.goal_x.squaredNorm() + inst.goal_z.squaredNorm());
  }
  p.P = SpMat(p.n, p.n);
  p.P.setFromTriplets(ptrips.begin(), ptrips.end());

  // Equalities: initial conditions, per-step dynamics, terminal mean.
  const int s = ly.s;
  const int init_rows = ly.nx + ly.nz + s;
  const int dyn_rows = ly.nx + ly.nz + s;
  const int term_rows = opts.soft_terminal ? 0 : (ly.nx + ly.nz);
  const int m_eq = init_rows + (N - 1) * dyn_rows + term_rows;
  sp.rows.init_rows = init_rows;
  sp.rows.dyn_rows_per_step = dyn_rows;
  sp.rows.terminal_rows = term_rows;
  sp.rows.terminal_row = opts.soft_terminal ? -1 : init_rows + (N - 1) * dyn_rows;

  std::vector<Eigen::Triplet<double>> atrips;
  p.beq = Vec::Zero(m_eq);
  int row = 0;
  push_identity(atrips, row, ly.mu_off(0), ly.nx);
  p.beq.segment(row, ly.nx) = ref.mu[0];
  row += ly.nx;
  push_identity(atrips, row, ly.z_off(0), ly.nz);
  p.beq.segment(row, ly.nz) = ref.z[0];
  row += ly.nz;
  push_identity(atrips, row, ly.sig_off(0), s);  // Sigma_0 = 0
  row += s;

  for (int i = 0; i + 1 < N; ++i) {
    push_identity(atrips, row, ly.mu_off(i + 1), ly.nx);
    push_block(atrips, row, ly.mu_off(i), -dl.Phi[i]);
    push_block(atrips, row, ly.z_off(i), -dl.Lam[i]);
    push_block(atrips, row, ly.u_off(i), -dl.Gam[i]);
    p.beq.segment(row, ly.nx) = dl.gam[i];
    row += ly.nx;

    push_identity(atrips, row, ly.z_off(i + 1), ly.nz);
    push_block(atrips, row, ly.z_off(i), -dl.Phiz[i]);
    push_block(atrips, row, ly.u_off(i), -dl.Gamz[i]);
    p.beq.segment(row, ly.nz) = dl.gamz[i];
    row += ly.nz;

    push_identity(atrips, row, ly.sig_off(i + 1), s);
    push_block(atrips, row, ly.sig_off(i), -dl.Msig[i]);
    push_block(atrips, row, ly.z_off(i), -dl.Zsig[i]);
    p.beq.segment(row, s) = dl.csig[i];
    row += s;
  }
  if (!opts.soft_terminal) {
    push_identity(atrips, row, ly.mu_off(N - 1), ly.nx);
    p.beq.segment(row, ly.nx) = inst.goal_x;
    row += ly.nx;
    push_identity(atrips, row, ly.z_off(N - 1), ly.nz);
    p.beq.segment(row, ly.nz) = inst.goal_z;
    row += ly.nz;
  }
  p.Aeq = SpMat(m_eq, p.n);
  p.Aeq.setFromTriplets(atrips.begin(), atrips.end());

  // Control box.
  p.lb = Vec::Constant(p.n, -kInf);
  p.ub = Vec::Constant(p.n, kInf);
  for (int i = 0; i + 1 < N; ++i) {
    p.lb.segment(ly.u_off(i), ly.m) = inst.u_lo;
    p.ub.segment(ly.u_off(i), ly.m) = inst.u_hi;
  }

  // Tightened trust region: sum_i h (|mu_i - mu_k_i|^2 + 2 tr Sigma_i
  // + 2 tr Sigma_k_i) <= delta, covariances upper-bounded through
  // E|a-b|^2 <= 2 E|a|^2 + 2 E|b|^2 on centered parts.
  if (std::isfinite(delta)) {
    const double sh = std::sqrt(h);
    std::vector<Eigen::Triplet<double>> strips;
    p.c = Vec((N - 1) * ly.nx);
    p.a = Vec::Zero(p.n);
    p.k0 = 0.0;
    for (int i = 0; i + 1 < N; ++i) {
      push_identity(strips, i * ly.nx, ly.mu_off(i), ly.nx, sh);
      p.c.segment(i * ly.nx, ly.nx) = sh * ref.mu[i];
      for (int cidx = 0; cidx < ly.nx; ++cidx)
        p.a(ly.sig_off(i) + sym_pack_index(ly.nx, cidx, cidx)) += 2.0 * h;
      p.k0 += 2.0 * h * ref.Sigma[i].trace();
    }
    p.S = SpMat((N - 1) * ly.nx, p.n);
    p.S.setFromTriplets(strips.begin(), strips.end());
    p.d = delta;
    p.has_quad = true;
  }
  return sp;
}

ConvexityAudit audit_subproblem(const ConvexSubproblem& sp) {
  ConvexityAudit audit;
  const Qcqp& p = sp.qcqp;

  audit.hessian_psd = true;
  for (int k = 0; k < p.P.outerSize(); ++k) {
    for (SpMat::InnerIterator it(p.P, k); it; ++it) {
      if (it.row() != it.col() || it.value() < 0.0) {
        audit.hessian_psd = false;
        break;
      }
    }
  }

  // Ball-plus-linear form is convex whenever present.
  audit.quad_convex = !p.has_quad || p.S.rows() > 0;

  const Mat dense = Mat(p.Aeq);
  Eigen::ColPivHouseholderQR<Mat> qr(dense);
  qr.setThreshold(1e-10);
  audit.equalities_full_rank = qr.rank() == dense.rows();
  return audit;
}

std::string dump_qcqp(const Qcqp& p) {
  std::string out;
  char buf[128];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out += buf;
  };
  auto triplets = [&](const SpMat& mat) {
    line("%d %d %d\n", static_cast<int>(mat.rows()), static_cast<int>(mat.cols()),
         static_cast<int>(mat.nonZeros()));
    for (int k = 0; k < mat.outerSize(); ++k)
      for (SpMat::InnerIterator it(mat, k); it; ++it)
        line("%d %d %.17g\n", static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  };
  auto vector = [&](const Vec& v) {
    line("%d\n", static_cast<int>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) line("%.17g\n", v(i));
  };

  out += "stocp-qp 1\n";
  line("n %d\n", p.n);
  out += "P\n";
  triplets(p.P);
  out += "q\n";
  vector(p.q);
  line("obj_const %.17g\n", p.obj_const);
  out += "Aeq\n";
  triplets(p.Aeq);
  out += "beq\n";
  vector(p.beq);
  out += "lb\n";
  vector(p.lb);
  out += "ub\n";
  vector(p.ub);
  line("quad %d\n", p.has_quad ? 1 : 0);
  if (p.has_quad) {
    out += "S\n";
    triplets(p.S);
    out += "c\n";
    vector(p.c);
    out += "a\n";
    vector(p.a);
    line("k0 %.17g\n", p.k0);
    line("d %.17g\n", p.d);
  }
  return out;
}

}  // namespace stocp
