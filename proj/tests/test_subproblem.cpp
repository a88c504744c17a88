#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "stocp/scp.hpp"
#include "stocp/solver.hpp"
#include "stocp/subproblem.hpp"

using namespace stocp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fixture {
  OcpInstance inst;
  TimeGrid grid;
  Iterate ref;
  LtvCoefficients coeffs;
  LinearizedCost lin_cost;

  explicit Fixture(double sigma = 0.05, int nodes = 11) : inst(oracles::lq_instance(sigma)),
                                                          grid(nodes, inst.horizon) {
    const Iterate guess = initial_guess(inst, grid);
    auto [co, lc] = linearize(inst, guess, grid);
    // reference produced by propagate on the same coefficients
    ref = propagate(co, guess.u, inst.x0, inst.z0, grid);
    coeffs = co;
    lin_cost = lc;
  }
};

}  // namespace

TEST_CASE("reference rollout has zero dynamics residual") {
  Fixture f;
  const ConvexSubproblem sp =
      build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, kInf, f.grid);
  const Vec x = sp.pack(f.ref);
  const Vec resid = sp.qcqp.Aeq * x - sp.qcqp.beq;
  // all rows except the trailing terminal block vanish
  const int dyn_rows = sp.rows.init_rows + (f.grid.nodes - 1) * sp.rows.dyn_rows_per_step;
  CHECK(resid.head(dyn_rows).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("delta = inf drops the trust region and solves to OPTIMAL") {
  Fixture f;
  const ConvexSubproblem sp =
      build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, kInf, f.grid);
  CHECK(!sp.qcqp.has_quad);
  const SubproblemSolution sol = solve(sp.qcqp);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_res < 1e-8);
  CHECK(sol.dual_res < 1e-8);
}

TEST_CASE("delta = 0 pins the mean trajectory to the reference") {
  // zero diffusion so tr Sigma_k = 0 and the budget is exactly zero
  Fixture f(0.0);

  SUBCASE("reference missing the goal is infeasible") {
    CHECK((f.ref.mu.back() - f.inst.goal_x).lpNorm<Eigen::Infinity>() > 1e-3);
    const ConvexSubproblem sp =
        build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, 0.0, f.grid);
    const SubproblemSolution sol = solve(sp.qcqp);
    CHECK(sol.status == SolveStatus::Infeasible);
  }

  SUBCASE("reference hitting the goal is returned") {
    OcpInstance inst = f.inst;
    inst.goal_x = f.ref.mu.back();  // make the rollout endpoint the goal
    inst.goal_z = f.ref.z.back();
    const ConvexSubproblem sp =
        build_subproblem(inst, f.coeffs, f.lin_cost, f.ref, 0.0, f.grid);
    const SubproblemSolution sol = solve(sp.qcqp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const Iterate it = sp.unpack(sol.x);
    for (int i = 0; i + 1 < f.grid.nodes; ++i)
      CHECK((it.mu[i] - f.ref.mu[i]).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("car subproblem dimensions at delta0 = 100") {
  const OcpInstance inst = build_car_benchmark(BenchmarkConfig{});
  const TimeGrid grid = BenchmarkConfig{}.grid();
  const Iterate guess = initial_guess(inst, grid);
  auto [co, lc] = linearize(inst, guess, grid);
  const ConvexSubproblem sp = build_subproblem(inst, co, lc, guess, 100.0, grid);

  CHECK(grid.nodes == 41);
  CHECK(sp.layout.N == 41);
  CHECK(sp.layout.total() == 40 * 2 + 41 * (3 + 2 + 6));
  const int expect_eq = (3 + 2 + 6) + 40 * (3 + 2 + 6) + (3 + 2);
  CHECK(sp.qcqp.Aeq.rows() == expect_eq);
  CHECK(sp.qcqp.has_quad);
  CHECK(sp.qcqp.S.rows() == 40 * 3);
  CHECK(sp.qcqp.d == 100.0);
  int boxed = 0;
  for (int j = 0; j < sp.qcqp.n; ++j)
    if (std::isfinite(sp.qcqp.lb(j))) ++boxed;
  CHECK(boxed == 40 * 2);
}

TEST_CASE("convexity audit passes on a small car subproblem") {
  BenchmarkConfig cfg;
  cfg.nodes = 6;
  const OcpInstance inst = build_car_benchmark(cfg);
  const TimeGrid grid = cfg.grid();
  const Iterate guess = initial_guess(inst, grid);
  auto [co, lc] = linearize(inst, guess, grid);
  const ConvexSubproblem sp = build_subproblem(inst, co, lc, guess, 100.0, grid);
  const ConvexityAudit audit = audit_subproblem(sp);
  CHECK(audit.hessian_psd);
  CHECK(audit.equalities_full_rank);
  CHECK(audit.quad_convex);
}

TEST_CASE("variance weight scales only the cost") {
  Fixture f;
  OcpInstance heavy = f.inst;
  heavy.variance_weight = 10.0;
  LinearizedCost lc_heavy = f.lin_cost;
  lc_heavy.variance_weight = 10.0;

  const ConvexSubproblem a =
      build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, 5.0, f.grid);
  const ConvexSubproblem b = build_subproblem(heavy, f.coeffs, lc_heavy, f.ref, 5.0, f.grid);

  CHECK((Mat(a.qcqp.Aeq) - Mat(b.qcqp.Aeq)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.qcqp.beq - b.qcqp.beq).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((Mat(a.qcqp.P) - Mat(b.qcqp.P)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((Mat(a.qcqp.S) - Mat(b.qcqp.S)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.qcqp.a - b.qcqp.a).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.qcqp.k0 == b.qcqp.k0);
  // only the linear cost on the Sigma diagonal moved
  Vec dq = b.qcqp.q - a.qcqp.q;
  bool only_sigma = true;
  for (int i = 0; i < a.qcqp.n; ++i) {
    if (dq(i) != 0.0 && i < a.layout.sig_off(0)) only_sigma = false;
  }
  CHECK(only_sigma);
  CHECK(dq.lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("pack and unpack are inverse") {
  Fixture f;
  const ConvexSubproblem sp =
      build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, kInf, f.grid);
  const Vec x = sp.pack(f.ref);
  const Iterate it = sp.unpack(x);
  for (int i = 0; i < f.grid.nodes; ++i) {
    CHECK((it.mu[i] - f.ref.mu[i]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((it.Sigma[i] - f.ref.Sigma[i]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("negative delta is rejected") {
  Fixture f;
  CHECK_THROWS_AS(build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, -1.0, f.grid),
                  std::invalid_argument);
}

TEST_CASE("triplet dump round-trips key scalars") {
  Fixture f;
  const ConvexSubproblem sp =
      build_subproblem(f.inst, f.coeffs, f.lin_cost, f.ref, 7.5, f.grid);
  const std::string text = dump_qcqp(sp.qcqp);
  CHECK(text.find("stocp-qp 1") == 0);
  CHECK(text.find("d 7.5") != std::string::npos);
  CHECK(text.find("quad 1") != std::string::npos);
}
