#include "stocp/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace stocp {

double ObstacleSet::potential_as_printed(const Eigen::Vector2d& r) const {
  double total = 0.0;
  for (const auto& o : obstacles) {
    const double inflated = o.radius + clearance;
    const double dist2 = (r - o.center).squaredNorm();
    if (dist2 < inflated * inflated) total += dist2 - inflated * inflated;
  }
  return total;
}

double ObstacleSet::potential(const Eigen::Vector2d& r) const {
  const double p = potential_as_printed(r);
  return sign == PenaltySign::AsPrinted ? p : -p;
}

Eigen::Vector2d ObstacleSet::potential_gradient(const Eigen::Vector2d& r) const {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const auto& o : obstacles) {
    const double inflated = o.radius + clearance;
    const Eigen::Vector2d diff = r - o.center;
    if (diff.squaredNorm() < inflated * inflated) g += 2.0 * diff;
  }
  return sign == PenaltySign::AsPrinted ? g : Eigen::Vector2d(-g);
}

void ObstacleSet::validate() const {
  for (const auto& o : obstacles) {
    if (!(o.radius > 0.0)) throw std::invalid_argument("ObstacleSet: radius must be positive");
  }
  if (clearance < 0.0) throw std::invalid_argument("ObstacleSet: clearance must be non-negative");
  if (weight < 0.0) throw std::invalid_argument("ObstacleSet: weight must be non-negative");
}

double eval_obstacle_potential(const ObstacleSet& obs, const Eigen::Vector2d& r) {
  return obs.potential_as_printed(r);
}

void OcpInstance::validate() const {
  if (n_x < 1 || n_z < 1 || m < 1 || d < 1)
    throw std::invalid_argument("OcpInstance: all dimensions must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("OcpInstance: horizon must be positive");
  if (u_lo.size() != m || u_hi.size() != m)
    throw std::invalid_argument("OcpInstance: control bounds must have size m");
  for (int j = 0; j < m; ++j) {
    if (!(u_lo(j) < u_hi(j)))
      throw std::invalid_argument("OcpInstance: u_lo < u_hi must hold componentwise");
  }
  if (x0.size() != n_x || goal_x.size() != n_x)
    throw std::invalid_argument("OcpInstance: x0/goal_x must have size n_x");
  if (z0.size() != n_z || goal_z.size() != n_z)
    throw std::invalid_argument("OcpInstance: z0/goal_z must have size n_z");
  if (!drift_x || !drift_z || !diffusion || !control_cost || !state_penalty)
    throw std::invalid_argument("OcpInstance: missing evaluator");
  obstacles.validate();
}

std::pair<Vec, Vec> eval_drift(const OcpInstance& inst, double t, const Vec& u,
                               const Vec& x, const Vec& z) {
  if (u.size() != inst.m || x.size() != inst.n_x || z.size() != inst.n_z)
    throw std::invalid_argument("eval_drift: dimension mismatch");
  return {inst.drift_x(t, u, x, z), inst.drift_z(t, u, z)};
}

std::vector<Obstacle> BenchmarkConfig::default_obstacles() {
  return {
      {{0.45, 0.85}, 0.30},
      {{1.35, 1.45}, 0.30},
      {{0.95, 2.30}, 0.30},
      {{1.90, 2.35}, 0.30},
  };
}

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Vec json_vec(const nlohmann::json& j, const char* key, Eigen::Index expected) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected) {
    std::ostringstream msg;
    msg << "config: key '" << key << "' must be an array of length " << expected;
    throw std::invalid_argument(msg.str());
  }
  Vec v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v(i) = arr[i].get<double>();
  return v;
}

}  // namespace

BenchmarkConfig BenchmarkConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::ostringstream msg;
    msg << "config: parse error at line " << line_of_offset(text, e.byte) << ": " << e.what();
    throw std::invalid_argument(msg.str());
  }
  BenchmarkConfig cfg;
  try {
    cfg.alpha2 = j.at("alpha2").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.clearance = j.at("clearance").get<double>();
    cfg.obstacles.clear();
    for (const auto& o : j.at("obstacles")) {
      cfg.obstacles.push_back({{o.at("cx").get<double>(), o.at("cy").get<double>()},
                               o.at("radius").get<double>()});
    }
    cfg.goal = json_vec(j, "goal", 5);
    cfg.horizon = j.at("horizon").get<double>();
    cfg.nodes = j.at("N").get<int>();
    const auto& cb = j.at("control_bounds");
    cfg.u_lo = json_vec(cb, "lo", 2);
    cfg.u_hi = json_vec(cb, "hi", 2);
    if (j.contains("x0")) cfg.x0 = json_vec(j, "x0", 3);
    if (j.contains("z0")) cfg.z0 = json_vec(j, "z0", 2);
    if (j.contains("penalty_sign")) {
      const std::string s = j["penalty_sign"].get<std::string>();
      if (s == "as_printed") cfg.penalty_sign = PenaltySign::AsPrinted;
      else if (s == "repulsive") cfg.penalty_sign = PenaltySign::Repulsive;
      else throw std::invalid_argument("config: penalty_sign must be 'as_printed' or 'repulsive'");
    }
    if (j.contains("variance_weight")) cfg.variance_weight = j["variance_weight"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return cfg;
}

BenchmarkConfig BenchmarkConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

OcpInstance build_car_benchmark(const BenchmarkConfig& config) {
  if (!(config.horizon > 0.0))
    throw std::invalid_argument("build_car_benchmark: horizon must be positive");
  for (const auto& o : config.obstacles)
    if (!(o.radius > 0.0))
      throw std::invalid_argument("build_car_benchmark: obstacle radii must be positive");

  const double a2 = config.alpha2;
  const double b2 = config.beta2;

  OcpInstance inst;
  inst.n_x = 3;
  inst.n_z = 2;
  inst.m = 2;
  inst.d = 3;
  inst.horizon = config.horizon;
  inst.u_lo = config.u_lo;
  inst.u_hi = config.u_hi;
  inst.x0 = config.x0;
  inst.z0 = config.z0;
  inst.goal_x = config.goal.head(3);
  inst.goal_z = config.goal.tail(2);
  inst.variance_weight = config.variance_weight;

  inst.obstacles.obstacles = config.obstacles;
  inst.obstacles.clearance = config.clearance;
  inst.obstacles.weight = config.lambda;
  inst.obstacles.sign = config.penalty_sign;

  // x = (r_x, r_y, theta), z = (v, omega)
  inst.drift_x = [](double, const Vec& u, const Vec& x, const Vec& z) {
    (void)u;
    Vec r(3);
    r << z(0) * std::cos(x(2)), z(0) * std::sin(x(2)), z(1);
    return r;
  };
  inst.drift_z = [](double, const Vec& u, const Vec&) { return u; };
  inst.diffusion = [a2, b2](double, const Vec& z) {
    const double vw = z(0) * z(1);
    Mat s = Mat::Zero(3, 3);
    s(0, 0) = a2 * vw;
    s(1, 1) = a2 * vw;
    s(2, 2) = b2 * vw;
    return s;
  };

  inst.control_cost = [](const Vec& u) { return u.squaredNorm(); };
  inst.quadratic_control_cost = true;

  const ObstacleSet obs = inst.obstacles;
  inst.state_penalty = [obs](double, const Vec& x) {
    return obs.weight * obs.potential(obs.position_of(x));
  };
  inst.state_penalty_grad = [obs](double, const Vec& x) {
    const Eigen::Vector2d g = obs.weight * obs.potential_gradient(obs.position_of(x));
    Vec out = Vec::Zero(x.size());
    out(obs.pos_x) = g(0);
    out(obs.pos_y) = g(1);
    return out;
  };

  inst.jac_x = [](double, const Vec&, const Vec& x, const Vec& z) {
    Mat j = Mat::Zero(3, 3);
    j(0, 2) = -z(0) * std::sin(x(2));
    j(1, 2) = z(0) * std::cos(x(2));
    return j;
  };
  inst.jac_xz = [](double, const Vec&, const Vec& x, const Vec&) {
    Mat j = Mat::Zero(3, 2);
    j(0, 0) = std::cos(x(2));
    j(1, 0) = std::sin(x(2));
    j(2, 1) = 1.0;
    return j;
  };
  inst.control_map_x = [](double, const Vec&, const Vec&) { return Mat::Zero(3, 2); };
  inst.jac_z = [](double, const Vec&, const Vec&) { return Mat::Zero(2, 2); };
  inst.control_map_z = [](double, const Vec&) { return Mat::Identity(2, 2); };
  inst.diffusion_dz = [a2, b2](double, const Vec& z, int j) {
    Mat s = Mat::Zero(3, 3);
    const double other = (j == 0) ? z(1) : z(0);
    s(0, 0) = a2 * other;
    s(1, 1) = a2 * other;
    s(2, 2) = b2 * other;
    return s;
  };

  inst.validate();
  return inst;
}

}  // namespace stocp
