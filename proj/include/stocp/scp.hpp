#pragma once

#include <vector>

#include "stocp/linearize.hpp"
#include "stocp/moments.hpp"
#include "stocp/problem.hpp"
#include "stocp/solver.hpp"

namespace stocp {

struct ScpOptions {
  double delta0 = 100.0;
  double shrink = 0.99;
  double tol = 1e-3;
  int max_outer = 100;
  SolverOptions solver;
  // When a subproblem is infeasible the iteration is retried once with the
  // terminal equality moved into the cost. Needed to escape structurally
  // singular references such as the zero-velocity straight-line guess.
  bool soft_fallback = true;
  double soft_terminal_weight = 1e4;
};

struct IterationRecord {
  int k = 0;
  double delta = 0.0;
  double objective = 0.0;
  double metric = std::numeric_limits<double>::quiet_NaN();
  double tr_usage = 0.0;
  bool tr_strict = true;
  double tr_sigma_norm = 0.0;  // L2-in-time norm of tr Sigma
  SolveStatus status = SolveStatus::MaxIter;
  bool soft = false;
  int solver_iterations = 0;
};

struct ScpResult {
  std::vector<Iterate> history;  // [0] is the initial guess
  std::vector<IterationRecord> records;
  bool converged = false;
  int iterations = 0;
  Vec terminal_multiplier;  // p-frak recovered from the last hard solve
  bool has_terminal_multiplier = false;
};

// Discrete form of the convergence criterion:
// sum_i h (|u_next - u_curr|^2 + |u_curr - u_prev|^2).
double convergence_metric(const std::vector<Vec>& u_next, const std::vector<Vec>& u_curr,
                          const std::vector<Vec>& u_prev, const TimeGrid& grid);

// Monitor for the strict trust-region hypothesis. The integrated squared
// distance between the two Gaussian iterates is evaluated under the optimal
// (Bures) coupling, the tightest realization consistent with the per-node
// marginals: it vanishes iff the iterates coincide.
std::pair<bool, double> strict_trust_region_check(const Iterate& curr, const Iterate& prev,
                                                  double delta, const TimeGrid& grid);

// Straight-line initial guess: mu and z interpolate start to goal, u = 0,
// Sigma = 0.
Iterate initial_guess(const OcpInstance& inst, const TimeGrid& grid);

ScpResult run_scp(const OcpInstance& inst, const Iterate& init, const TimeGrid& grid,
                  const ScpOptions& opts = {});

}  // namespace stocp
