#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "stocp/time_grid.hpp"

namespace stocp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 0.0;
};

// How the printed obstacle potential enters the cost. The printed form is
// negative inside the inflated disk; "repulsive" flips it so the penalty is
// positive inside and pushes the mean out under minimization.
enum class PenaltySign { AsPrinted, Repulsive };

struct ObstacleSet {
  std::vector<Obstacle> obstacles;
  double clearance = 0.1;   // epsilon
  double weight = 500.0;    // lambda
  int pos_x = 0;            // index of r_x inside the x block
  int pos_y = 1;            // index of r_y inside the x block
  PenaltySign sign = PenaltySign::Repulsive;

  // Sum of ||r - r_o||^2 - (delta_o + eps)^2 over obstacles whose inflated
  // disk contains r; zero contribution otherwise. Exactly the printed form.
  double potential_as_printed(const Eigen::Vector2d& r) const;

  // Potential with the configured sign convention applied (weight excluded).
  double potential(const Eigen::Vector2d& r) const;
  Eigen::Vector2d potential_gradient(const Eigen::Vector2d& r) const;

  Eigen::Vector2d position_of(const Vec& x) const {
    return {x(pos_x), x(pos_y)};
  }

  void validate() const;
};

double eval_obstacle_potential(const ObstacleSet& obs, const Eigen::Vector2d& r);

// Stochastic OCP with state split (x, z): dx = b^x dt + sigma(t, z) dB,
// dz = b^z dt deterministic, control-affine drifts, box control set, terminal
// mean constraint, running cost G(u) + L0(t, x) + variance penalty.
struct OcpInstance {
  int n_x = 1, n_z = 1, m = 1, d = 1;
  double horizon = 1.0;

  std::function<Vec(double, const Vec&, const Vec&, const Vec&)> drift_x;  // (t,u,x,z)
  std::function<Vec(double, const Vec&, const Vec&)> drift_z;              // (t,u,z)
  std::function<Mat(double, const Vec&)> diffusion;                        // (t,z) -> n_x x d

  std::function<double(const Vec&)> control_cost;        // G(u)
  bool quadratic_control_cost = true;                    // G(u) = |u|^2
  std::function<double(double, const Vec&)> state_penalty;  // L0(t,x)

  // Optional analytic derivatives; when absent central differences are used.
  std::function<Mat(double, const Vec&, const Vec&, const Vec&)> jac_x;   // d b^x / dx
  std::function<Mat(double, const Vec&, const Vec&, const Vec&)> jac_xz;  // d b^x / dz
  std::function<Mat(double, const Vec&, const Vec&)> control_map_x;      // (t,x,z) -> n_x x m
  std::function<Mat(double, const Vec&, const Vec&)> jac_z;              // d b^z / dz
  std::function<Mat(double, const Vec&)> control_map_z;                  // (t,z) -> n_z x m
  std::function<Mat(double, const Vec&, int)> diffusion_dz;              // d sigma / dz_j
  std::function<Vec(double, const Vec&)> state_penalty_grad;

  Vec u_lo, u_hi;
  Vec x0, z0;
  Vec goal_x, goal_z;
  ObstacleSet obstacles;
  double variance_weight = 1.0;

  void validate() const;  // throws std::invalid_argument on bad data
};

// Evaluates both drift blocks with dimension checks.
std::pair<Vec, Vec> eval_drift(const OcpInstance& inst, double t, const Vec& u,
                               const Vec& x, const Vec& z);

// Car benchmark configuration; defaults match the shipped configs/car.json.
struct BenchmarkConfig {
  double alpha2 = 0.1;
  double beta2 = 0.01;
  double lambda = 500.0;
  double clearance = 0.1;
  std::vector<Obstacle> obstacles = default_obstacles();
  Vec goal = (Vec(5) << 2.2, 3.0, 0.0, 0.0, 0.0).finished();
  double horizon = 5.0;
  int nodes = 41;
  Vec u_lo = (Vec(2) << -2.0, -2.0).finished();
  Vec u_hi = (Vec(2) << 2.0, 2.0).finished();
  Vec x0 = Vec::Zero(3);
  Vec z0 = Vec::Zero(2);
  PenaltySign penalty_sign = PenaltySign::Repulsive;
  double variance_weight = 1.0;

  static std::vector<Obstacle> default_obstacles();
  static BenchmarkConfig from_json_file(const std::string& path);
  static BenchmarkConfig from_json_text(const std::string& text);

  TimeGrid grid() const { return TimeGrid(nodes, horizon); }
};

// Unicycle-with-slip car: x = (r_x, r_y, theta), z = (v, omega), u = (a_v, a_omega).
OcpInstance build_car_benchmark(const BenchmarkConfig& config);

}  // namespace stocp
