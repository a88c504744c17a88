#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stocp/problem.hpp"

using namespace stocp;

TEST_CASE("car benchmark defaults match the shipped config bit for bit") {
  const BenchmarkConfig defaults;
  const BenchmarkConfig parsed =
      BenchmarkConfig::from_json_file(std::string(STOCP_CONFIG_DIR) + "/car.json");
  CHECK(parsed.alpha2 == defaults.alpha2);
  CHECK(parsed.beta2 == defaults.beta2);
  CHECK(parsed.lambda == defaults.lambda);
  CHECK(parsed.clearance == defaults.clearance);
  CHECK(parsed.horizon == defaults.horizon);
  CHECK(parsed.nodes == defaults.nodes);
  CHECK(parsed.goal == defaults.goal);
  CHECK(parsed.u_lo == defaults.u_lo);
  CHECK(parsed.u_hi == defaults.u_hi);
  CHECK(parsed.variance_weight == defaults.variance_weight);
  CHECK(parsed.penalty_sign == defaults.penalty_sign);
  REQUIRE(parsed.obstacles.size() == defaults.obstacles.size());
  for (std::size_t i = 0; i < parsed.obstacles.size(); ++i) {
    CHECK(parsed.obstacles[i].center == defaults.obstacles[i].center);
    CHECK(parsed.obstacles[i].radius == defaults.obstacles[i].radius);
  }
}

TEST_CASE("default instance carries the paper constants") {
  const OcpInstance inst = build_car_benchmark(BenchmarkConfig{});
  CHECK(inst.horizon == 5.0);
  CHECK(inst.goal_x == (Vec(3) << 2.2, 3.0, 0.0).finished());
  CHECK(inst.goal_z == Vec::Zero(2));
  CHECK(inst.obstacles.weight == 500.0);
  CHECK(inst.obstacles.clearance == 0.1);
  // alpha^2, beta^2 enter through the diffusion
  const Mat s = inst.diffusion(0.0, (Vec(2) << 1.0, 1.0).finished());
  CHECK(s(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s(2, 2) == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("zero obstacles give an identically zero state penalty") {
  BenchmarkConfig cfg;
  cfg.obstacles.clear();
  const OcpInstance inst = build_car_benchmark(cfg);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const Vec x = (Vec(3) << dist(gen), dist(gen), dist(gen)).finished();
    CHECK(inst.state_penalty(dist(gen), x) == 0.0);
  }
}

TEST_CASE("zero noise config gives the zero diffusion matrix") {
  BenchmarkConfig cfg;
  cfg.alpha2 = 0.0;
  cfg.beta2 = 0.0;
  const OcpInstance inst = build_car_benchmark(cfg);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const Vec z = (Vec(2) << dist(gen), dist(gen)).finished();
    CHECK(inst.diffusion(dist(gen), z).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("obstacle potential: printed form") {
  ObstacleSet obs;
  obs.obstacles = {{{1.0, 1.0}, 0.5}};
  obs.clearance = 0.1;

  SUBCASE("far from every obstacle") {
    CHECK(eval_obstacle_potential(obs, {10.0, 10.0}) == 0.0);
  }
  SUBCASE("at the center") {
    CHECK(eval_obstacle_potential(obs, {1.0, 1.0}) == doctest::Approx(-0.36).epsilon(1e-14));
  }
  SUBCASE("on the inflated boundary") {
    CHECK(eval_obstacle_potential(obs, {1.6, 1.0}) == 0.0);
  }
  SUBCASE("continuity across the boundary") {
    // points within 1e-9 of the boundary differ by < 1e-8
    for (int k = 0; k < 32; ++k) {
      const double phi = 2.0 * M_PI * k / 32.0;
      const Eigen::Vector2d dir(std::cos(phi), std::sin(phi));
      const Eigen::Vector2d center(1.0, 1.0);
      const double inside = eval_obstacle_potential(obs, center + (0.6 - 1e-9) * dir);
      const double outside = eval_obstacle_potential(obs, center + (0.6 + 1e-9) * dir);
      CHECK(std::abs(inside - outside) < 1e-8);
    }
  }
}

TEST_CASE("repulsive sign flips the potential used in the cost") {
  BenchmarkConfig cfg;
  cfg.obstacles = {{{0.0, 0.0}, 0.5}};
  const OcpInstance rep = build_car_benchmark(cfg);
  cfg.penalty_sign = PenaltySign::AsPrinted;
  const OcpInstance printed = build_car_benchmark(cfg);
  const Vec x = Vec::Zero(3);
  CHECK(rep.state_penalty(0.0, x) == doctest::Approx(500.0 * 0.36).epsilon(1e-14));
  CHECK(printed.state_penalty(0.0, x) == doctest::Approx(-500.0 * 0.36).epsilon(1e-14));
}

TEST_CASE("car drift evaluations") {
  const OcpInstance inst = build_car_benchmark(BenchmarkConfig{});

  SUBCASE("theta=0, v=1, omega=0, u=0") {
    auto [dx, dz] = eval_drift(inst, 0.0, Vec::Zero(2), Vec::Zero(3),
                               (Vec(2) << 1.0, 0.0).finished());
    CHECK(dx(0) == 1.0);
    CHECK(dx(1) == 0.0);
    CHECK(dx(2) == 0.0);
    CHECK(dz == Vec::Zero(2));
  }
  SUBCASE("theta=pi/2, v=2, omega=1, u=(0.5,-0.5)") {
    const Vec x = (Vec(3) << 0.0, 0.0, M_PI / 2.0).finished();
    const Vec z = (Vec(2) << 2.0, 1.0).finished();
    const Vec u = (Vec(2) << 0.5, -0.5).finished();
    auto [dx, dz] = eval_drift(inst, 0.0, u, x, z);
    CHECK(dx(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dx(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(dx(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dz(0) == 0.5);
    CHECK(dz(1) == -0.5);
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(eval_drift(inst, 0.0, Vec::Zero(3), Vec::Zero(3), Vec::Zero(2)),
                    std::invalid_argument);
  }
}

TEST_CASE("drift is affine in the control (random sampling)") {
  const OcpInstance inst = build_car_benchmark(BenchmarkConfig{});
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = (Vec(3) << dist(gen), dist(gen), dist(gen)).finished();
    const Vec z = (Vec(2) << dist(gen), dist(gen)).finished();
    const Vec u1 = (Vec(2) << dist(gen), dist(gen)).finished();
    const Vec u2 = (Vec(2) << dist(gen), dist(gen)).finished();
    const double a = unit(gen);
    const double t = dist(gen);
    const Vec mix_x = inst.drift_x(t, a * u1 + (1.0 - a) * u2, x, z);
    const Vec lin_x = a * inst.drift_x(t, u1, x, z) + (1.0 - a) * inst.drift_x(t, u2, x, z);
    CHECK((mix_x - lin_x).lpNorm<Eigen::Infinity>() < 1e-12);
    const Vec mix_z = inst.drift_z(t, a * u1 + (1.0 - a) * u2, z);
    const Vec lin_z = a * inst.drift_z(t, u1, z) + (1.0 - a) * inst.drift_z(t, u2, z);
    CHECK((mix_z - lin_z).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("invalid configurations are rejected") {
  BenchmarkConfig cfg;
  SUBCASE("non-positive radius") {
    cfg.obstacles[0].radius = 0.0;
    CHECK_THROWS_AS(build_car_benchmark(cfg), std::invalid_argument);
  }
  SUBCASE("non-positive horizon") {
    cfg.horizon = -1.0;
    CHECK_THROWS_AS(build_car_benchmark(cfg), std::invalid_argument);
  }
}

TEST_CASE("config parse errors carry a line number") {
  try {
    BenchmarkConfig::from_json_text("{\n  \"alpha2\": 0.1,\n  oops\n}");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}
