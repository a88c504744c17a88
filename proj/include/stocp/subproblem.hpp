#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <string>

#include "stocp/linearize.hpp"
#include "stocp/moments.hpp"
#include "stocp/problem.hpp"

namespace stocp {

using SpMat = Eigen::SparseMatrix<double>;

// Canonical convex QCQP:
//   min  1/2 x^T P x + q^T x + obj_const
//   s.t. Aeq x = beq,  lb <= x <= ub  (entrywise, +-inf allowed),
//        ||S x - c||^2 + a^T x + k0 <= d        (at most one, optional)
struct Qcqp {
  int n = 0;
  SpMat P;
  Vec q;
  double obj_const = 0.0;
  SpMat Aeq;
  Vec beq;
  Vec lb, ub;
  bool has_quad = false;
  SpMat S;
  Vec c;
  Vec a;
  double k0 = 0.0;
  double d = 0.0;

  double objective(const Vec& x) const {
    return 0.5 * x.dot(P * x) + q.dot(x) + obj_const;
  }
  double quad_value(const Vec& x) const {
    return has_quad ? (S * x - c).squaredNorm() + a.dot(x) + k0 : 0.0;
  }
};

// Index map for the stacked decision vector
// [u_0..u_{N-2}, mu_0..mu_{N-1}, z_0..z_{N-1}, Sig_0..Sig_{N-1}] with Sig
// symmetric-packed.
struct VarLayout {
  int N = 0, m = 0, nx = 0, nz = 0, s = 0;

  VarLayout() = default;
  VarLayout(int nodes, int m_, int nx_, int nz_)
      : N(nodes), m(m_), nx(nx_), nz(nz_), s(sym_pack_size(nx_)) {}

  int u_off(int i) const { return i * m; }
  int mu_off(int i) const { return (N - 1) * m + i * nx; }
  int z_off(int i) const { return (N - 1) * m + N * nx + i * nz; }
  int sig_off(int i) const { return (N - 1) * m + N * (nx + nz) + i * s; }
  int total() const { return (N - 1) * m + N * (nx + nz + s); }
};

// Row map for the equality block, used to recover terminal-constraint duals.
struct RowLayout {
  int init_rows = 0;           // mu_0, z_0, Sig_0
  int dyn_rows_per_step = 0;   // mu, z, Sig per step
  int terminal_row = -1;       // first terminal row (-1 when soft)
  int terminal_rows = 0;       // nx + nz when hard
};

struct ConvexSubproblem {
  Qcqp qcqp;
  VarLayout layout;
  RowLayout rows;
  TimeGrid grid;
  bool soft_terminal = false;

  Iterate unpack(const Vec& x) const;
  Vec pack(const Iterate& it) const;
};

struct BuildOptions {
  bool soft_terminal = false;
  double soft_terminal_weight = 1e4;
};

// Assembles the deterministic convex program for one SCP iteration: Euler
// moment dynamics as equalities, terminal mean constraint, control box, the
// tightened trust region at radius delta (delta = inf drops it), and the
// variance-penalized linearized cost. All integrals are left-endpoint
// Riemann sums with weight h.
ConvexSubproblem build_subproblem(const OcpInstance& inst, const LtvCoefficients& coeffs,
                                  const LinearizedCost& lin_cost, const Iterate& ref,
                                  double delta, const TimeGrid& grid,
                                  const BuildOptions& opts = {});

// Convexity / structure audit: P diagonal PSD, quadratic constraint in
// ball-plus-linear form, equality matrix full row rank (dense QR; intended
// for small instances).
struct ConvexityAudit {
  bool hessian_psd = false;
  bool equalities_full_rank = false;
  bool quad_convex = false;
  bool ok() const { return hessian_psd && equalities_full_rank && quad_convex; }
};
ConvexityAudit audit_subproblem(const ConvexSubproblem& sp);

// Sparse-triplet text dump (see README for the format).
std::string dump_qcqp(const Qcqp& p);

}  // namespace stocp
