#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bisim {

// Portable samplers on top of mt19937_64; std:: distributions are
// implementation-defined and would make seeds non-reproducible across
// standard libraries.

/// Uniform on [0, 1) with 53 random bits.
inline double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double standard_exponential(std::mt19937_64& engine) {
  return -std::log1p(-unit_uniform(engine));
}

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& engine, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % n;
}

}  // namespace bisim
