#include "stocp/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stocp/rng.hpp"

namespace stocp {

namespace {

constexpr int kBlock = 256;  // fixed accumulation block; independent of threads

struct Precomputed {
  std::vector<Vec> z;       // deterministic rollout
  std::vector<Mat> sigma;   // diffusion at (t_i, z_i)
};

Precomputed roll_z(const OcpInstance& inst, const std::vector<Vec>& controls,
                   const TimeGrid& grid) {
  const int n = grid.nodes;
  const double h = grid.step();
  if (static_cast<int>(controls.size()) < n - 1)
    throw std::invalid_argument("simulate: controls must cover the first N-1 nodes");
  Precomputed pre;
  pre.z.resize(n);
  pre.sigma.resize(n);
  pre.z[0] = inst.z0;
  for (int i = 0; i + 1 < n; ++i)
    pre.z[i + 1] = pre.z[i] + h * inst.drift_z(grid.time(i), controls[i], pre.z[i]);
  for (int i = 0; i < n; ++i) pre.sigma[i] = inst.diffusion(grid.time(i), pre.z[i]);
  return pre;
}

// One path into out[node * n_x + c]. Returns the first non-finite node or -1.
int simulate_path(const OcpInstance& inst, const std::vector<Vec>& controls,
                  const TimeGrid& grid, const Precomputed& pre, std::uint64_t seed,
                  std::uint32_t path, double* out) {
  const int n = grid.nodes;
  const int nx = inst.n_x;
  const double h = grid.step();
  const double sh = std::sqrt(h);
  Vec x = inst.x0;
  Vec noise(inst.d);
  for (int c = 0; c < nx; ++c) out[c] = x(c);
  for (int i = 0; i + 1 < n; ++i) {
    for (int c = 0; c < inst.d; c += 2) {
      double z0, z1;
      normal_pair(seed, path, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(c / 2), 0,
                  z0, z1);
      noise(c) = z0;
      if (c + 1 < inst.d) noise(c + 1) = z1;
    }
    x += h * inst.drift_x(grid.time(i), controls[i], x, pre.z[i]) + sh * (pre.sigma[i] * noise);
    if (!x.allFinite()) return i + 1;
    double* slot = out + static_cast<std::size_t>(i + 1) * nx;
    for (int c = 0; c < nx; ++c) slot[c] = x(c);
  }
  return -1;
}

void throw_non_finite(long packed) {
  const long path = packed / 1000000L;
  const long node = packed % 1000000L;
  std::ostringstream msg;
  msg << "simulate: non-finite state at path " << path << ", node " << node;
  throw std::runtime_error(msg.str());
}

SamplePathEnsemble simulate_impl(const OcpInstance& inst, const std::vector<Vec>& controls,
                                 const TimeGrid& grid, int paths, std::uint64_t seed,
                                 bool parallel) {
  if (paths < 1) throw std::invalid_argument("simulate: need at least one path");
  const Precomputed pre = roll_z(inst, controls, grid);
  SamplePathEnsemble ens;
  ens.grid = grid;
  ens.n_x = inst.n_x;
  ens.paths = paths;
  ens.seed = seed;
  ens.z = pre.z;
  ens.x.assign(static_cast<std::size_t>(paths) * grid.nodes * inst.n_x, 0.0);

  std::atomic<long> bad{-1};
  const std::size_t stride = static_cast<std::size_t>(grid.nodes) * inst.n_x;
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < paths; ++p) {
      const int node = simulate_path(inst, controls, grid, pre, seed,
                                     static_cast<std::uint32_t>(p), ens.x.data() + p * stride);
      if (node >= 0) {
        long expected = -1;
        bad.compare_exchange_strong(expected, 1000000L * p + node);
      }
    }
  } else {
    for (int p = 0; p < paths; ++p) {
      const int node = simulate_path(inst, controls, grid, pre, seed,
                                     static_cast<std::uint32_t>(p), ens.x.data() + p * stride);
      if (node >= 0 && bad.load() < 0) bad.store(1000000L * p + node);
    }
  }
  if (bad.load() >= 0) throw_non_finite(bad.load());
  return ens;
}

}  // namespace

SamplePathEnsemble simulate(const OcpInstance& inst, const std::vector<Vec>& controls,
                            const TimeGrid& grid, int paths, std::uint64_t seed) {
  return simulate_impl(inst, controls, grid, paths, seed, true);
}

SamplePathEnsemble simulate_serial(const OcpInstance& inst, const std::vector<Vec>& controls,
                                   const TimeGrid& grid, int paths, std::uint64_t seed) {
  return simulate_impl(inst, controls, grid, paths, seed, false);
}

namespace {

int first_collision_node(const double* path, int nodes, int nx, const ObstacleSet& obs) {
  for (int i = 0; i < nodes; ++i) {
    const double rx = path[static_cast<std::size_t>(i) * nx + obs.pos_x];
    const double ry = path[static_cast<std::size_t>(i) * nx + obs.pos_y];
    for (const auto& o : obs.obstacles) {
      const double dx = rx - o.center(0);
      const double dy = ry - o.center(1);
      if (dx * dx + dy * dy < o.radius * o.radius) return i;
    }
  }
  return -1;
}

}  // namespace

double collision_rate(const SamplePathEnsemble& ens, const ObstacleSet& obstacles) {
  if (obstacles.obstacles.empty()) return 0.0;
  const std::size_t stride = static_cast<std::size_t>(ens.grid.nodes) * ens.n_x;
  long hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (int p = 0; p < ens.paths; ++p) {
    if (first_collision_node(ens.x.data() + p * stride, ens.grid.nodes, ens.n_x, obstacles) >= 0)
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ens.paths);
}

EmpiricalMoments empirical_moments(const SamplePathEnsemble& ens) {
  if (ens.paths < 2)
    throw std::invalid_argument("empirical_moments: need at least 2 paths for a covariance");
  const int n = ens.grid.nodes;
  const int nx = ens.n_x;
  EmpiricalMoments mom;
  mom.mean.assign(n, Vec::Zero(nx));
  mom.cov.assign(n, Mat::Zero(nx, nx));
  for (int p = 0; p < ens.paths; ++p)
    for (int i = 0; i < n; ++i) mom.mean[i] += ens.state(p, i);
  for (int i = 0; i < n; ++i) mom.mean[i] /= static_cast<double>(ens.paths);
  for (int p = 0; p < ens.paths; ++p)
    for (int i = 0; i < n; ++i) {
      const Vec diff = ens.state(p, i) - mom.mean[i];
      mom.cov[i] += diff * diff.transpose();
    }
  for (int i = 0; i < n; ++i) mom.cov[i] /= static_cast<double>(ens.paths - 1);
  return mom;
}

SimulationStats simulate_stats(const OcpInstance& inst, const std::vector<Vec>& controls,
                               const TimeGrid& grid, int paths, std::uint64_t seed,
                               bool parallel) {
  if (paths < 1) throw std::invalid_argument("simulate_stats: need at least one path");
  const Precomputed pre = roll_z(inst, controls, grid);
  const int n = grid.nodes;
  const int nx = inst.n_x;
  const int nblocks = (paths + kBlock - 1) / kBlock;

  struct BlockAcc {
    std::vector<Vec> sum;
    std::vector<Mat> sum2;
    std::vector<long> first_hit;
    long collisions = 0;
    long bad = -1;
  };
  std::vector<BlockAcc> acc(nblocks);

  std::atomic<long> bad{-1};
#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < nblocks; ++b) {
    BlockAcc& a = acc[b];
    a.sum.assign(n, Vec::Zero(nx));
    a.sum2.assign(n, Mat::Zero(nx, nx));
    a.first_hit.assign(n, 0);
    std::vector<double> buf(static_cast<std::size_t>(n) * nx);
    const int p_end = std::min(paths, (b + 1) * kBlock);
    for (int p = b * kBlock; p < p_end; ++p) {
      const int node = simulate_path(inst, controls, grid, pre, seed,
                                     static_cast<std::uint32_t>(p), buf.data());
      if (node >= 0) {
        a.bad = 1000000L * p + node;
        break;
      }
      for (int i = 0; i < n; ++i) {
        const Eigen::Map<const Vec> x(buf.data() + static_cast<std::size_t>(i) * nx, nx);
        a.sum[i] += x;
        a.sum2[i] += x * x.transpose();
      }
      const int hit = first_collision_node(buf.data(), n, nx, inst.obstacles);
      if (hit >= 0) {
        ++a.collisions;
        ++a.first_hit[hit];
      }
    }
  }

  SimulationStats st;
  st.paths = paths;
  st.mean.assign(n, Vec::Zero(nx));
  st.first_collision.assign(n, 0);
  std::vector<Mat> sum2(n, Mat::Zero(nx, nx));
  long collisions = 0;
  for (int b = 0; b < nblocks; ++b) {  // fixed reduction order
    if (acc[b].bad >= 0) throw_non_finite(acc[b].bad);
    for (int i = 0; i < n; ++i) {
      st.mean[i] += acc[b].sum[i];
      sum2[i] += acc[b].sum2[i];
      st.first_collision[i] += acc[b].first_hit[i];
    }
    collisions += acc[b].collisions;
  }
  for (int i = 0; i < n; ++i) st.mean[i] /= static_cast<double>(paths);
  if (paths >= 2) {
    st.cov.assign(n, Mat::Zero(nx, nx));
    for (int i = 0; i < n; ++i) {
      st.cov[i] = (sum2[i] - static_cast<double>(paths) * st.mean[i] * st.mean[i].transpose()) /
                  static_cast<double>(paths - 1);
    }
  }
  st.collision_rate =
      inst.obstacles.obstacles.empty()
          ? 0.0
          : static_cast<double>(collisions) / static_cast<double>(paths);
  return st;
}

std::pair<double, double> continuity_probe(const OcpInstance& inst, const std::vector<Vec>& u1,
                                           const std::vector<Vec>& u2, const TimeGrid& grid,
                                           int paths, std::uint64_t seed) {
  const int n = grid.nodes;
  const double h = grid.step();
  double control_gap = 0.0;
  for (int i = 0; i + 1 < n; ++i) control_gap += h * (u1[i] - u2[i]).norm();

  const Precomputed pre1 = roll_z(inst, u1, grid);
  const Precomputed pre2 = roll_z(inst, u2, grid);
  const int nblocks = (paths + kBlock - 1) / kBlock;
  std::vector<double> block_sum(nblocks, 0.0);
  std::vector<long> block_bad(nblocks, -1);

#pragma omp parallel for schedule(static)
  for (int b = 0; b < nblocks; ++b) {
    std::vector<double> buf1(static_cast<std::size_t>(n) * inst.n_x);
    std::vector<double> buf2(buf1.size());
    const int p_end = std::min(paths, (b + 1) * kBlock);
    for (int p = b * kBlock; p < p_end; ++p) {
      const int bad1 = simulate_path(inst, u1, grid, pre1, seed,
                                     static_cast<std::uint32_t>(p), buf1.data());
      const int bad2 = simulate_path(inst, u2, grid, pre2, seed,
                                     static_cast<std::uint32_t>(p), buf2.data());
      if (bad1 >= 0 || bad2 >= 0) {
        block_bad[b] = 1000000L * p + std::max(bad1, bad2);
        break;
      }
      double sup = 0.0;
      for (int i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (int c = 0; c < inst.n_x; ++c) {
          const double d = buf1[static_cast<std::size_t>(i) * inst.n_x + c] -
                           buf2[static_cast<std::size_t>(i) * inst.n_x + c];
          d2 += d * d;
        }
        sup = std::max(sup, d2);
      }
      block_sum[b] += sup;
    }
  }
  double total = 0.0;
  for (int b = 0; b < nblocks; ++b) {
    if (block_bad[b] >= 0) throw_non_finite(block_bad[b]);
    total += block_sum[b];
  }
  return {control_gap, total / static_cast<double>(paths)};
}

}  // namespace stocp
