// Timing comparison of the serial reference path kernel against the
// OpenMP-parallel one, plus a bit-identity check between the two.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "stocp/monte_carlo.hpp"
#include "stocp/problem.hpp"
#include "stocp/scp.hpp"

using namespace stocp;

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const int paths = quick ? 4000 : 40000;

  const BenchmarkConfig cfg;
  const OcpInstance inst = build_car_benchmark(cfg);
  const TimeGrid grid = cfg.grid();
  const Iterate guess = initial_guess(inst, grid);

  auto time_ms = [](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  SamplePathEnsemble serial, parallel;
  const double t_serial =
      time_ms([&] { serial = simulate_serial(inst, guess.u, grid, paths, 0); });
  const double t_parallel = time_ms([&] { parallel = simulate(inst, guess.u, grid, paths, 0); });

  const bool identical =
      serial.x.size() == parallel.x.size() &&
      std::memcmp(serial.x.data(), parallel.x.data(), serial.x.size() * sizeof(double)) == 0;

  std::printf("paths          %d\n", paths);
  std::printf("serial         %8.2f ms  (%.0f paths/s)\n", t_serial, paths / t_serial * 1e3);
  std::printf("openmp         %8.2f ms  (%.0f paths/s)\n", t_parallel,
              paths / t_parallel * 1e3);
  std::printf("speedup        %8.2fx\n", t_serial / t_parallel);
  std::printf("bit-identical  %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
