#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "stocp/solver.hpp"

using namespace stocp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Qcqp make_qcqp(const Mat& P, const Vec& q, const Mat& Aeq, const Vec& beq) {
  Qcqp p;
  p.n = static_cast<int>(P.rows());
  p.P = P.sparseView();
  p.q = q;
  p.Aeq = Aeq.sparseView();
  p.beq = beq;
  p.lb = Vec::Constant(p.n, -kInf);
  p.ub = Vec::Constant(p.n, kInf);
  return p;
}

void add_ball(Qcqp& p, const Vec& c, double radius) {
  p.has_quad = true;
  p.S = Mat::Identity(p.n, p.n).sparseView();
  p.c = c;
  p.a = Vec::Zero(p.n);
  p.k0 = 0.0;
  p.d = radius * radius;
}

}  // namespace

TEST_CASE("one variable, one equality: min |u|^2 s.t. u = 3") {
  Qcqp p = make_qcqp(2.0 * Mat::Identity(1, 1), Vec::Zero(1), Mat::Ones(1, 1),
                     Vec::Constant(1, 3.0));
  const SubproblemSolution sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("ball constraint: min |u|^2 s.t. |u - (2,0)|^2 <= 1") {
  Qcqp p = make_qcqp(2.0 * Mat::Identity(2, 2), Vec::Zero(2), Mat::Zero(0, 2), Vec::Zero(0));
  add_ball(p, (Vec(2) << 2.0, 0.0).finished(), 1.0);
  const SubproblemSolution sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(sol.x(1)) < 1e-7);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.trust_multiplier > 0.0);
}

TEST_CASE("random equality-constrained QPs match the dense KKT oracle") {
  std::mt19937_64 gen(51);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 18);
    const int m = static_cast<int>(gen() % (n / 2 + 1));
    Mat r = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
    const Mat P = r.transpose() * r + 0.1 * Mat::Identity(n, n);
    const Vec q = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
    const Mat A = Mat::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
    const Vec b = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(gen); });
    const Qcqp p = make_qcqp(P, q, A, b);
    const SubproblemSolution sol = solve(p);
    const auto oracle = oracles::solve_eq_qp_dense(P, q, A, b);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK((sol.x - oracle.x).lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("random small QCQPs match the bisection oracle") {
  std::mt19937_64 gen(53);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 28);
    const int m = static_cast<int>(gen() % (n / 3 + 1));
    Mat r = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
    const Mat P = r.transpose() * r + 0.1 * Mat::Identity(n, n);
    const Vec q = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
    const Mat A = Mat::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
    const Vec x_feas = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
    const Vec b = A * x_feas;
    Vec c = x_feas + 0.3 * Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
    const double radius = (x_feas - c).norm() + unif(gen);

    Qcqp p = make_qcqp(P, q, A, b);
    add_ball(p, c, radius);
    const SubproblemSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const auto oracle = oracles::solve_ball_qcqp_dense(P, q, A, b, c, radius);
    const double obj_oracle = 0.5 * oracle.x.dot(P * oracle.x) + q.dot(oracle.x);
    CHECK(std::abs(sol.objective - obj_oracle) < 1e-6 * std::max(1.0, std::abs(obj_oracle)));
  }
}

TEST_CASE("box clamping") {
  // min (u-5)^2 s.t. -1 <= u <= 2  ->  u = 2
  Qcqp p = make_qcqp(2.0 * Mat::Identity(1, 1), Vec::Constant(1, -10.0), Mat::Zero(0, 1),
                     Vec::Zero(0));
  p.lb(0) = -1.0;
  p.ub(0) = 2.0;
  const SubproblemSolution sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("solver is deterministic at the byte level") {
  std::mt19937_64 gen(59);
  std::normal_distribution<double> dist(0.0, 1.0);
  const int n = 12, m = 4;
  Mat r = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
  const Mat P = r.transpose() * r + 0.1 * Mat::Identity(n, n);
  const Vec q = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
  const Mat A = Mat::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
  const Vec x_feas = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
  Qcqp p = make_qcqp(P, q, A, A * x_feas);
  add_ball(p, x_feas, 0.5);

  const SubproblemSolution a = solve(p);
  const SubproblemSolution b = solve(p);
  REQUIRE(a.x.size() == b.x.size());
  CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.y.data(), b.y.data(), a.y.size() * sizeof(double)) == 0);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("splitting merit is non-increasing within an epoch") {
  std::mt19937_64 gen(61);
  std::normal_distribution<double> dist(0.0, 1.0);
  const int n = 15, m = 5;
  Mat r = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
  const Mat P = r.transpose() * r + 0.1 * Mat::Identity(n, n);
  const Vec q = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
  const Mat A = Mat::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return dist(gen); });
  const Vec x_feas = Vec::NullaryExpr(n, [&](Eigen::Index) { return dist(gen); });
  Qcqp p = make_qcqp(P, q, A, A * x_feas);
  add_ball(p, x_feas, 1.0);

  SolverOptions opts;
  opts.record_merit = true;
  const SubproblemSolution sol = solve(p, opts);
  REQUIRE(sol.merit.size() > 2);
  int violations = 0;
  for (std::size_t i = 1; i < sol.merit.size(); ++i) {
    if (sol.merit[i].epoch != sol.merit[i - 1].epoch) continue;
    if (sol.merit[i].value > sol.merit[i - 1].value + 1e-12 * (1.0 + sol.merit[0].value))
      ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("inconsistent equalities are reported INFEASIBLE") {
  Mat A(2, 1);
  A << 1.0, 1.0;
  Vec b(2);
  b << 3.0, 4.0;
  const Qcqp p = make_qcqp(2.0 * Mat::Identity(1, 1), Vec::Zero(1), A, b);
  const SubproblemSolution sol = solve(p);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("kkt_residual") {
  SUBCASE("zero candidate on unconstrained min |u|^2") {
    const Qcqp p = make_qcqp(2.0 * Mat::Identity(3, 3), Vec::Zero(3), Mat::Zero(0, 3),
                             Vec::Zero(0));
    const KktResidual r = kkt_residual(p, Vec::Zero(3));
    CHECK(r.stationarity == 0.0);
    CHECK(r.primal == 0.0);
    CHECK(r.complementarity == 0.0);
  }
  SUBCASE("solver output has tiny residuals") {
    Qcqp p = make_qcqp(2.0 * Mat::Identity(2, 2), Vec::Zero(2), Mat::Zero(0, 2), Vec::Zero(0));
    add_ball(p, (Vec(2) << 2.0, 0.0).finished(), 1.0);
    const SubproblemSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const KktResidual r = kkt_residual(p, sol.x, sol.y);
    CHECK(r.stationarity < 1e-7);
    CHECK(r.primal < 1e-7);
    CHECK(r.complementarity < 1e-7);
  }
  SUBCASE("primal residual equals the constraint gap for a shifted candidate") {
    Qcqp p = make_qcqp(2.0 * Mat::Identity(1, 1), Vec::Zero(1), Mat::Ones(1, 1),
                       Vec::Constant(1, 3.0));
    const KktResidual r = kkt_residual(p, Vec::Constant(1, 1.0));
    CHECK(r.primal == doctest::Approx(2.0).epsilon(1e-15));
  }
}
