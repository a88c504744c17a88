#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace stocp {

// Counter-based stream: philox4x32-10 (Salmon et al., "Parallel Random
// Numbers: As Easy as 1, 2, 3"). Each (seed, path, node, slot) tuple maps to
// an independent 128-bit block, so sample paths can be generated in any
// order, on any number of threads, with identical results.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t seed,
                                            std::uint32_t c0, std::uint32_t c1,
                                            std::uint32_t c2, std::uint32_t c3) {
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kW0; k1 += kW1;
    }
    return {c0, c1, c2, c3};
  }
};

// Two standard normals from one philox block via Box-Muller. u1 in (0,1],
// so the log is always finite.
inline void normal_pair(std::uint64_t seed, std::uint32_t path, std::uint32_t node,
                        std::uint32_t slot, std::uint32_t stream, double& z0, double& z1) {
  const auto b = Philox4x32::block(seed, path, node, slot, stream);
  const std::uint64_t a = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t c = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * 3.14159265358979323846 * u2;
  z0 = r * std::cos(phi);
  z1 = r * std::sin(phi);
}

// Identifier written to stats output so results can be matched to the
// generator that produced them.
inline const char* rng_algorithm_id() { return "philox4x32-10/box-muller"; }

}  // namespace stocp
