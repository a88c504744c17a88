#pragma once

#include <stdexcept>

namespace stocp {

/// Uniform time grid t_0 = 0 < ... < t_{N-1} = horizon, step h = horizon/(N-1).
struct TimeGrid {
  int nodes = 2;
  double horizon = 1.0;

  TimeGrid() = default;
  TimeGrid(int n, double tf) : nodes(n), horizon(tf) {
    if (n < 2) throw std::invalid_argument("TimeGrid: need at least 2 nodes");
    if (!(tf > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  }

  double step() const { return horizon / static_cast<double>(nodes - 1); }
  double time(int i) const { return step() * static_cast<double>(i); }
};

}  // namespace stocp
