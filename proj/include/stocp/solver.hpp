#pragma once

#include <optional>
#include <vector>

#include "stocp/subproblem.hpp"

namespace stocp {

enum class SolveStatus { Optimal, MaxIter, Infeasible };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double eps_pri = 1e-8;
  double eps_dual = 1e-8;
  int max_iter = 50000;
  double rho = 0.1;
  double rho_eq_scale = 1e3;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  int check_interval = 25;
  bool scaling = true;
  int scaling_iters = 10;
  bool polish = true;
  double polish_reg = 1e-9;
  double eps_prim_inf = 1e-9;
  bool record_merit = false;
};

struct MeritSample {
  int epoch;     // increments when rho changes (the metric changes with it)
  double value;  // fixed-point displacement of the splitting iteration
};

struct SubproblemSolution {
  Vec x;
  Vec y;  // duals for the stacked rows [eq; box; quad], unscaled
  SolveStatus status = SolveStatus::MaxIter;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double trust_multiplier = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  std::vector<MeritSample> merit;

  int eq_rows = 0, box_rows = 0, quad_rows = 0;
  Vec eq_dual() const { return y.head(eq_rows); }
};

struct WarmStart {
  Vec x;
  Vec y;
};

// Operator-splitting (ADMM) solve of the canonical QCQP: the equality-
// constrained quadratic block is handled by a cached LDL^T factorization,
// the control box by clamping, and the trust-region set by a projection
// whose scalar multiplier is found by bisection. Deterministic: identical
// inputs produce bit-identical outputs.
SubproblemSolution solve(const Qcqp& p, const SolverOptions& opts = {},
                         const std::optional<WarmStart>& warm = std::nullopt);

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

// Residuals of a candidate point; duals default to zero (primal-only check).
KktResidual kkt_residual(const Qcqp& p, const Vec& x, const Vec& y = Vec());

}  // namespace stocp
