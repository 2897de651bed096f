#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"

namespace bisim {

inline constexpr double kTriangleSlack = 1e-9;
inline constexpr double kDefaultMetricTolerance = 1e-9;

/// Result of checking the pseudometric axioms on a square matrix.
struct PseudoMetricCheck {
  bool ok = true;
  double max_diagonal = 0.0;     ///< max |d(i,i)|
  double max_asymmetry = 0.0;    ///< max |d(i,j) - d(j,i)|
  double min_entry = 0.0;        ///< most negative entry (0 if none)
  double max_triangle_excess = 0.0;  ///< max d(i,k) - d(i,j) - d(j,k), clipped at 0
};

PseudoMetricCheck check_pseudometric(const Matrix& d, double slack = kTriangleSlack);

/// Floyd-Warshall closure of a symmetric nonnegative matrix: the largest
/// pseudometric below it.
Matrix shortest_path_closure(Matrix d);

/// Random pseudometric: scale times the sup-norm distance between random
/// points of [0,1]^3, with states sharing about n/2 points.
Matrix random_pseudometric(std::size_t n, double scale, std::mt19937_64& engine);

/**
 * The behavioural metric operator
 *   K(d)(s,t) = max_a |R(s,a) - R(t,a)| + gamma * W1^d(P(s,a), P(t,a)).
 *
 * Holds one transport solver per worker thread. `threads` > 1 splits the
 * state pairs across std::threads; each entry is computed independently, so
 * the output does not depend on the thread count.
 */
class MetricOperator {
 public:
  explicit MetricOperator(const FiniteMdp& mdp, unsigned threads = 1);

  Matrix apply(const Matrix& d) const;
  const FiniteMdp& mdp() const { return mdp_; }

 private:
  const FiniteMdp& mdp_;
  unsigned threads_;
};

Matrix apply_operator(const FiniteMdp& m, const Matrix& d);

struct MetricOptions {
  double tolerance = kDefaultMetricTolerance;
  /// 0 selects 10 * ceil(log(tolerance) / log(gamma)).
  std::size_t max_iterations = 0;
  unsigned threads = 1;
};

struct MetricRun {
  Matrix final;
  std::size_t iterations = 0;
  std::vector<double> residuals;  ///< sup-norm change per sweep
  double certified_error = 0.0;   ///< residuals.back() * gamma / (1 - gamma)
};

std::size_t default_iteration_cap(double tolerance, double gamma);

/// Picard iteration of K from d = 0 until the sup-norm change is <= tolerance.
MetricRun solve_metric(const FiniteMdp& m, const MetricOptions& options = {});
MetricRun solve_metric(const FiniteMdp& m, double tolerance);

/// Geometric-mean ratio of successive residuals, using only residuals at
/// least `floor` (so round-off at the tail does not dominate). Returns 0 when
/// fewer than two usable residuals exist.
double residual_ratio(const std::vector<double>& residuals, double floor);

struct ContractionEstimate {
  /// max over random pseudometric pairs of |K d1 - K d2|_inf / |d1 - d2|_inf
  double random_pair_factor = 0.0;
  /// geometric rate of the Picard residuals of solve_metric
  double residual_ratio_factor = 0.0;
  std::size_t pairs_used = 0;
  std::size_t iterations = 0;
};

ContractionEstimate estimate_contraction(const FiniteMdp& m, std::size_t trials,
                                         std::uint64_t seed, const MetricOptions& options = {});

/// Same as above, reusing an existing run for the residual estimator.
ContractionEstimate estimate_contraction(const FiniteMdp& m, std::size_t trials,
                                         std::uint64_t seed, const MetricRun& run,
                                         double tolerance);

}  // namespace bisim
