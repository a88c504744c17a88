#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "stocp/linearize.hpp"
#include "stocp/monte_carlo.hpp"
#include "stocp/pmp.hpp"
#include "stocp/problem.hpp"
#include "stocp/rng.hpp"
#include "stocp/scp.hpp"
#include "stocp/solver.hpp"
#include "stocp/subproblem.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stocp;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string controls_csv(const std::vector<Vec>& u, const TimeGrid& grid) {
  std::string out = "node,t";
  for (Eigen::Index j = 0; j < u[0].size(); ++j) out += ",u" + std::to_string(j);
  out += "\n";
  for (int i = 0; i + 1 < grid.nodes; ++i) {
    out += std::to_string(i) + "," + fmt17(grid.time(i));
    for (Eigen::Index j = 0; j < u[i].size(); ++j) out += "," + fmt17(u[i](j));
    out += "\n";
  }
  return out;
}

std::vector<Vec> read_controls_csv(const fs::path& path, int m, int nodes) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open controls file " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<Vec> u;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      const std::string tok = line.substr(pos, next == std::string::npos ? next : next - pos);
      vals.push_back(std::stod(tok));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (static_cast<int>(vals.size()) != 2 + m)
      throw std::runtime_error("controls file: expected " + std::to_string(2 + m) +
                               " columns, got " + std::to_string(vals.size()));
    Vec ui(m);
    for (int j = 0; j < m; ++j) ui(j) = vals[2 + j];
    u.push_back(ui);
  }
  if (static_cast<int>(u.size()) != nodes - 1)
    throw std::runtime_error("controls file: expected " + std::to_string(nodes - 1) +
                             " rows, got " + std::to_string(u.size()));
  return u;
}

std::string iterates_csv(const ScpResult& res, const TimeGrid& grid, const OcpInstance& inst) {
  std::string out = "iter,node,t";
  for (int j = 0; j < inst.n_x; ++j) out += ",mu" + std::to_string(j);
  for (int j = 0; j < inst.n_z; ++j) out += ",z" + std::to_string(j);
  for (int j = 0; j < inst.m; ++j) out += ",u" + std::to_string(j);
  out += ",tr_sigma\n";
  for (std::size_t k = 0; k < res.history.size(); ++k) {
    const Iterate& it = res.history[k];
    for (int i = 0; i < grid.nodes; ++i) {
      out += std::to_string(k) + "," + std::to_string(i) + "," + fmt17(grid.time(i));
      for (int j = 0; j < inst.n_x; ++j) out += "," + fmt17(it.mu[i](j));
      for (int j = 0; j < inst.n_z; ++j) out += "," + fmt17(it.z[i](j));
      for (int j = 0; j < inst.m; ++j)
        out += "," + fmt17(i + 1 < grid.nodes ? it.u[i](j) : 0.0);
      out += "," + fmt17(it.Sigma[i].trace()) + "\n";
    }
  }
  return out;
}

json summary_json(const ScpResult& res, const OcpInstance& inst, bool pmp_requested,
                  const MaximalityReport* pmp) {
  json j;
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  const Iterate& last = res.history.back();
  j["final_objective"] = res.records.empty() ? 0.0 : res.records.back().objective;
  j["terminal_error_mu"] = (last.mu.back() - inst.goal_x).lpNorm<Eigen::Infinity>();
  j["terminal_error_z"] = (last.z.back() - inst.goal_z).lpNorm<Eigen::Infinity>();
  json delta = json::array(), objective = json::array(), metric = json::array(),
       usage = json::array(), strict = json::array(), trs = json::array(),
       status = json::array(), soft = json::array();
  for (const auto& r : res.records) {
    delta.push_back(r.delta);
    objective.push_back(r.objective);
    if (std::isnan(r.metric)) metric.push_back(nullptr);
    else metric.push_back(r.metric);
    usage.push_back(r.tr_usage);
    strict.push_back(r.tr_strict);
    trs.push_back(r.tr_sigma_norm);
    status.push_back(to_string(r.status));
    soft.push_back(r.soft);
  }
  j["delta"] = delta;
  j["objective"] = objective;
  j["metric"] = metric;
  j["trust_region_usage"] = usage;
  j["trust_region_strict"] = strict;
  j["tr_sigma_norm"] = trs;
  j["status"] = status;
  j["soft_terminal"] = soft;
  if (pmp_requested && pmp) {
    j["surrogate_pmp_available"] = pmp->available;
    j["surrogate_pmp_residual"] = pmp->residual;
  }
  return j;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
};

int cmd_solve(const CommonArgs& common, const ScpOptions& scp_opts, bool pmp_check,
              bool dump_qp) {
  const BenchmarkConfig cfg = BenchmarkConfig::from_json_file(common.config_path);
  const OcpInstance inst = build_car_benchmark(cfg);
  const TimeGrid grid = cfg.grid();

  fs::create_directories(common.out_dir);
  const Iterate init = initial_guess(inst, grid);

  if (dump_qp) {
    auto [coeffs, lc] = linearize(inst, init, grid);
    const ConvexSubproblem sp =
        build_subproblem(inst, coeffs, lc, init, scp_opts.delta0 * scp_opts.shrink, grid);
    write_file(fs::path(common.out_dir) / "subproblem_iter1.qp", dump_qcqp(sp.qcqp));
  }

  const ScpResult res = run_scp(inst, init, grid, scp_opts);

  MaximalityReport pmp;
  if (pmp_check && res.converged && res.has_terminal_multiplier) {
    auto [coeffs, lc] = linearize(inst, res.history.back(), grid);
    const AdjointTrajectory adj = backward_adjoint(coeffs, lc, res.terminal_multiplier);
    pmp = maximality_residual(adj, res.history.back(), inst, coeffs, grid);
  }

  write_file(fs::path(common.out_dir) / "iterates.csv", iterates_csv(res, grid, inst));
  write_file(fs::path(common.out_dir) / "controls.csv",
             controls_csv(res.history.back().u, grid));
  write_file(fs::path(common.out_dir) / "summary.json",
             summary_json(res, inst, pmp_check, &pmp).dump(2) + "\n");

  std::string log;
  for (const auto& r : res.records) {
    json rec;
    rec["k"] = r.k;
    rec["delta"] = r.delta;
    rec["objective"] = r.objective;
    if (std::isnan(r.metric)) rec["metric"] = nullptr;
    else rec["metric"] = r.metric;
    rec["usage"] = r.tr_usage;
    rec["status"] = to_string(r.status);
    rec["soft"] = r.soft;
    rec["solver_iterations"] = r.solver_iterations;
    log += rec.dump() + "\n";
  }
  write_file(fs::path(common.out_dir) / "scp_log.jsonl", log);

  std::cerr << (res.converged ? "converged" : "did not converge") << " after " << res.iterations
            << " iterations\n";
  return res.converged ? 0 : 2;
}

int cmd_simulate(const CommonArgs& common, const std::string& controls_path, int paths,
                 std::uint64_t seed) {
  const BenchmarkConfig cfg = BenchmarkConfig::from_json_file(common.config_path);
  const OcpInstance inst = build_car_benchmark(cfg);
  const TimeGrid grid = cfg.grid();
  const std::vector<Vec> u = read_controls_csv(controls_path, inst.m, grid.nodes);

  const SimulationStats st = simulate_stats(inst, u, grid, paths, seed);

  fs::create_directories(common.out_dir);
  std::string csv = "node,t";
  for (int j = 0; j < inst.n_x; ++j) csv += ",mean" + std::to_string(j);
  for (int j = 0; j < inst.n_x; ++j) csv += ",cov" + std::to_string(j) + std::to_string(j);
  csv += ",first_collision_count\n";
  for (int i = 0; i < grid.nodes; ++i) {
    csv += std::to_string(i) + "," + fmt17(grid.time(i));
    for (int j = 0; j < inst.n_x; ++j) csv += "," + fmt17(st.mean[i](j));
    for (int j = 0; j < inst.n_x; ++j)
      csv += "," + fmt17(st.cov.empty() ? 0.0 : st.cov[i](j, j));
    csv += "," + std::to_string(st.first_collision[i]) + "\n";
  }
  write_file(fs::path(common.out_dir) / "ensemble.csv", csv);

  json stats;
  stats["paths"] = st.paths;
  stats["seed"] = seed;
  stats["rng"] = rng_algorithm_id();
  stats["collision_rate"] = st.collision_rate;
  json mean = json::array();
  for (int j = 0; j < inst.n_x; ++j) mean.push_back(st.mean.back()(j));
  stats["final_mean"] = mean;
  if (!st.cov.empty()) {
    json cov = json::array();
    for (int j = 0; j < inst.n_x; ++j) cov.push_back(st.cov.back()(j, j));
    stats["final_cov_diag"] = cov;
  }
  write_file(fs::path(common.out_dir) / "stats.json", stats.dump(2) + "\n");

  std::cerr << "collision rate " << st.collision_rate << " over " << paths << " paths\n";
  return 0;
}

int cmd_check(const CommonArgs& common) {
  const BenchmarkConfig cfg = BenchmarkConfig::from_json_file(common.config_path);
  const OcpInstance inst = build_car_benchmark(cfg);
  const TimeGrid grid = cfg.grid();
  bool all_ok = true;
  auto report = [&](const char* name, bool ok, double value) {
    std::printf("%-28s %-6s %.3e\n", name, ok ? "PASS" : "FAIL", value);
    all_ok = all_ok && ok;
  };

  // Jacobian audit at random points.
  {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(inst.n_x), z(inst.n_z), u(inst.m);
      for (int j = 0; j < inst.n_x; ++j) x(j) = dist(gen);
      for (int j = 0; j < inst.n_z; ++j) z(j) = dist(gen);
      for (int j = 0; j < inst.m; ++j) u(j) = dist(gen);
      worst = std::max(worst, check_jacobians(inst, dist(gen), u, x, z, 1e-5));
    }
    report("jacobian audit", worst < 1e-6, worst);
  }

  // Moment propagation vs Monte Carlo on the linearization at the guess.
  {
    const Iterate init = initial_guess(inst, grid);
    auto [coeffs, lc] = linearize(inst, init, grid);
    const Iterate prop = propagate(coeffs, init.u, inst.x0, inst.z0, grid);

    OcpInstance lin = inst;
    const LtvCoefficients co = coeffs;
    const TimeGrid g = grid;
    lin.drift_x = [co, g](double t, const Vec& u, const Vec& x, const Vec& z) {
      const int i = std::min<int>(static_cast<int>(t / g.step() + 0.5), g.nodes - 1);
      return co.drift_x_lin(i, u, x, z);
    };
    lin.drift_z = [co, g](double t, const Vec& u, const Vec& z) {
      const int i = std::min<int>(static_cast<int>(t / g.step() + 0.5), g.nodes - 1);
      return co.drift_z_lin(i, u, z);
    };
    lin.diffusion = [co, g](double t, const Vec& z) {
      const int i = std::min<int>(static_cast<int>(t / g.step() + 0.5), g.nodes - 1);
      return co.diffusion_lin(i, z);
    };
    const int mc_paths = 20000;
    const SimulationStats st = simulate_stats(lin, init.u, g, mc_paths, 7);
    double worst = 0.0;
    for (int i = 0; i < g.nodes; ++i) {
      for (int r = 0; r < inst.n_x; ++r)
        for (int c = 0; c < inst.n_x; ++c) {
          const double sd = std::sqrt((prop.Sigma[i](r, r) * prop.Sigma[i](c, c) +
                                       prop.Sigma[i](r, c) * prop.Sigma[i](r, c)) /
                                      std::max(1, mc_paths - 1));
          const double band = 5.0 * std::max(sd, 1e-12);
          worst = std::max(worst, std::abs(st.cov[i](r, c) - prop.Sigma[i](r, c)) / band);
        }
    }
    report("moment consistency", worst <= 1.0, worst);
  }

  // Convexity audit of the first subproblem.
  {
    const Iterate init = initial_guess(inst, grid);
    auto [coeffs, lc] = linearize(inst, init, grid);
    const ConvexSubproblem sp = build_subproblem(inst, coeffs, lc, init, 100.0, grid);
    const ConvexityAudit audit = audit_subproblem(sp);
    report("convexity audit", audit.ok(), audit.ok() ? 0.0 : 1.0);
  }

  return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential convex programming for stochastic optimal control"};
  app.require_subcommand(1);

  CommonArgs common;
  ScpOptions scp_opts;
  bool pmp_check = false, dump_qp = false;
  std::string controls_path;
  int paths = 10000;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "benchmark config JSON")->required();
    cmd->add_option("--out-dir", common.out_dir, "output directory");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "run the SCP loop");
  add_common(solve_cmd);
  solve_cmd->add_option("--delta0", scp_opts.delta0, "initial trust-region radius");
  solve_cmd->add_option("--shrink", scp_opts.shrink, "trust-region shrink factor");
  solve_cmd->add_option("--tol", scp_opts.tol, "convergence tolerance");
  solve_cmd->add_option("--max-scp-iter", scp_opts.max_outer, "outer iteration cap");
  solve_cmd->add_option("--eps-pri", scp_opts.solver.eps_pri, "solver primal tolerance");
  solve_cmd->add_option("--eps-dual", scp_opts.solver.eps_dual, "solver dual tolerance");
  solve_cmd->add_option("--max-iter", scp_opts.solver.max_iter, "solver iteration cap");
  solve_cmd->add_flag("--pmp-check", pmp_check, "append surrogate PMP residual to the summary");
  solve_cmd->add_flag("--dump-qp", dump_qp, "dump the first subproblem in triplet form");

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo validation of controls");
  add_common(sim_cmd);
  sim_cmd->add_option("--controls", controls_path, "controls.csv from solve")->required();
  sim_cmd->add_option("--paths", paths, "number of sample paths");
  sim_cmd->add_option("--seed", seed, "master seed");

  CLI::App* check_cmd = app.add_subcommand("check", "run self-audits");
  add_common(check_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(common, scp_opts, pmp_check, dump_qp);
    if (sim_cmd->parsed()) return cmd_simulate(common, controls_path, paths, seed);
    if (check_cmd->parsed()) return cmd_check(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
