#pragma once

#include <cstdint>
#include <vector>

#include "stocp/problem.hpp"
#include "stocp/time_grid.hpp"

namespace stocp {

// Euler-Maruyama sample paths of the original non-linear SDE. The z block is
// deterministic and stored once; the x block is path-major. Increments come
// from counter-based per-(path, node) streams, so the ensemble is a pure
// function of (instance, controls, grid, paths, seed) regardless of
// execution order or thread count.
struct SamplePathEnsemble {
  TimeGrid grid;
  int n_x = 0;
  int paths = 0;
  std::uint64_t seed = 0;
  std::vector<Vec> z;          // N entries
  std::vector<double> x;       // paths * N * n_x, path-major

  Eigen::Map<const Vec> state(int path, int node) const {
    return Eigen::Map<const Vec>(x.data() + (static_cast<std::size_t>(path) * grid.nodes + node) * n_x,
                                 n_x);
  }
};

// OpenMP-parallel over paths; simulate_serial is the plain-loop reference
// used by tests and the benchmark. Both produce identical bytes.
SamplePathEnsemble simulate(const OcpInstance& inst, const std::vector<Vec>& controls,
                            const TimeGrid& grid, int paths, std::uint64_t seed);
SamplePathEnsemble simulate_serial(const OcpInstance& inst, const std::vector<Vec>& controls,
                                   const TimeGrid& grid, int paths, std::uint64_t seed);

// Fraction of paths that touch a physical obstacle disk (clearance excluded)
// at some grid node.
double collision_rate(const SamplePathEnsemble& ens, const ObstacleSet& obstacles);

struct EmpiricalMoments {
  std::vector<Vec> mean;
  std::vector<Mat> cov;  // unbiased
};
EmpiricalMoments empirical_moments(const SamplePathEnsemble& ens);

// Streaming per-node statistics for path counts too large to store. Partial
// sums are accumulated over fixed-size path blocks and reduced in block
// order, so results do not depend on the thread count.
struct SimulationStats {
  std::vector<Vec> mean;
  std::vector<Mat> cov;            // empty when paths < 2
  double collision_rate = 0.0;
  std::vector<long> first_collision;  // per-node histogram of first hits
  int paths = 0;
};
SimulationStats simulate_stats(const OcpInstance& inst, const std::vector<Vec>& controls,
                               const TimeGrid& grid, int paths, std::uint64_t seed,
                               bool parallel = true);

// Common-random-number probe of the control-to-path continuity: returns
// (integral of |u1-u2| dt, mean over paths of sup_t |x_u1 - x_u2|^2).
std::pair<double, double> continuity_probe(const OcpInstance& inst, const std::vector<Vec>& u1,
                                           const std::vector<Vec>& u2, const TimeGrid& grid,
                                           int paths, std::uint64_t seed);

}  // namespace stocp
