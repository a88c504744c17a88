#include "stocp/scp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "stocp/subproblem.hpp"

namespace stocp {

double convergence_metric(const std::vector<Vec>& u_next, const std::vector<Vec>& u_curr,
                          const std::vector<Vec>& u_prev, const TimeGrid& grid) {
  const double h = grid.step();
  double acc = 0.0;
  for (int i = 0; i + 1 < grid.nodes; ++i)
    acc += h * ((u_next[i] - u_curr[i]).squaredNorm() + (u_curr[i] - u_prev[i]).squaredNorm());
  return acc;
}

namespace {

Mat psd_sqrt(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// Squared Bures distance between centered Gaussians:
// tr A + tr B - 2 tr (A^1/2 B A^1/2)^1/2.
double bures_sq(const Mat& a, const Mat& b) {
  const Mat ra = psd_sqrt(a);
  const Mat inner = psd_sqrt(ra * 0.5 * (b + b.transpose()) * ra);
  const double v = a.trace() + b.trace() - 2.0 * inner.trace();
  return std::max(v, 0.0);
}

}  // namespace

std::pair<bool, double> strict_trust_region_check(const Iterate& curr, const Iterate& prev,
                                                  double delta, const TimeGrid& grid) {
  const double h = grid.step();
  double lhs = 0.0;
  for (int i = 0; i + 1 < grid.nodes; ++i) {
    lhs += h * ((curr.mu[i] - prev.mu[i]).squaredNorm() + bures_sq(curr.Sigma[i], prev.Sigma[i]));
  }
  const bool strict = lhs < delta;
  const double usage = std::isfinite(delta) && delta > 0.0 ? lhs / delta : 0.0;
  return {strict, usage};
}

Iterate initial_guess(const OcpInstance& inst, const TimeGrid& grid) {
  const int n = grid.nodes;
  Iterate it;
  it.u.assign(n - 1, Vec::Zero(inst.m));
  it.mu.resize(n);
  it.z.resize(n);
  it.Sigma.assign(n, Mat::Zero(inst.n_x, inst.n_x));
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(n - 1);
    it.mu[i] = (1.0 - a) * inst.x0 + a * inst.goal_x;
    it.z[i] = (1.0 - a) * inst.z0 + a * inst.goal_z;
  }
  return it;
}

namespace {

double tr_sigma_l2(const Iterate& it, const TimeGrid& grid) {
  const double h = grid.step();
  double acc = 0.0;
  for (int i = 0; i < grid.nodes; ++i) {
    const double tr = it.Sigma[i].trace();
    acc += h * tr * tr;
  }
  return std::sqrt(acc);
}

}  // namespace

ScpResult run_scp(const OcpInstance& inst, const Iterate& init, const TimeGrid& grid,
                  const ScpOptions& opts) {
  ScpResult out;
  out.history.push_back(init);

  std::optional<WarmStart> warm;
  double delta = opts.delta0;

  for (int k = 1; k <= opts.max_outer; ++k) {
    delta *= opts.shrink;  // iteration k solves the subproblem at radius delta0 * shrink^k

    const Iterate& ref = out.history.back();
    auto [coeffs, lin_cost] = linearize(inst, ref, grid);
    ConvexSubproblem sp = build_subproblem(inst, coeffs, lin_cost, ref, delta, grid);
    SubproblemSolution sol = solve(sp.qcqp, opts.solver, warm);

    IterationRecord rec;
    rec.k = k;
    rec.delta = delta;
    rec.solver_iterations = sol.iterations;

    if (sol.status == SolveStatus::Infeasible && opts.soft_fallback) {
      BuildOptions bo;
      bo.soft_terminal = true;
      bo.soft_terminal_weight = opts.soft_terminal_weight;
      ConvexSubproblem soft = build_subproblem(inst, coeffs, lin_cost, ref, delta, grid, bo);
      std::optional<WarmStart> soft_warm;
      if (warm) soft_warm = WarmStart{warm->x, Vec()};
      SubproblemSolution soft_sol = solve(soft.qcqp, opts.solver, soft_warm);
      if (soft_sol.status != SolveStatus::Infeasible) {
        sol = std::move(soft_sol);
        sp = std::move(soft);
        rec.soft = true;
        rec.solver_iterations += sol.iterations;
      }
    }

    rec.status = sol.status;
    if (sol.status == SolveStatus::Infeasible) {
      out.records.push_back(rec);
      out.iterations = k;
      out.converged = false;
      return out;
    }

    Iterate next = sp.unpack(sol.x);
    rec.objective = sol.objective;
    auto [strict, usage] = strict_trust_region_check(next, ref, delta, grid);
    rec.tr_strict = strict;
    rec.tr_usage = usage;
    rec.tr_sigma_norm = tr_sigma_l2(next, grid);
    if (k >= 2)
      rec.metric = convergence_metric(next.u, out.history[k - 1].u, out.history[k - 2].u, grid);

    out.history.push_back(std::move(next));
    out.records.push_back(rec);
    out.iterations = k;

    if (!rec.soft) {
      warm = WarmStart{sol.x, sol.y};
      if (sp.rows.terminal_rows > 0) {
        out.terminal_multiplier =
            -sol.y.segment(sp.rows.terminal_row, sp.rows.terminal_rows);
        out.has_terminal_multiplier = true;
      }
    } else {
      warm = WarmStart{sol.x, Vec()};
    }

    if (k >= 2 && rec.metric <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace stocp
