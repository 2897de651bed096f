#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"
#include "bisim/random.hpp"

namespace testing {

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng,
                                          double zero_prob = 0.0) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = bisim::unit_uniform(rng) < zero_prob ? 0.0 : bisim::standard_exponential(rng);
    total += x;
  }
  if (total == 0.0) {
    w[bisim::uniform_index(rng, n)] = 1.0;
    return w;
  }
  for (auto& x : w) x /= total;
  return w;
}

inline bisim::Matrix line_cost(std::size_t n) {
  bisim::Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = std::abs(double(i) - double(j));
  return c;
}

/// Brute-force metric operator entry for deterministic successor rows.
inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
