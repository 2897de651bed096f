#include "bisim/metric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <thread>

#include "bisim/errors.hpp"
#include "bisim/random.hpp"
#include "bisim/transport.hpp"

namespace bisim {

PseudoMetricCheck check_pseudometric(const Matrix& d, double slack) {
  PseudoMetricCheck c;
  if (!d.square()) throw StructuralError("pseudometric matrix must be square");
  const std::size_t n = d.rows();
  for (std::size_t i = 0; i < n; ++i) {
    c.max_diagonal = std::max(c.max_diagonal, std::abs(d(i, i)));
    for (std::size_t j = 0; j < n; ++j) {
      c.max_asymmetry = std::max(c.max_asymmetry, std::abs(d(i, j) - d(j, i)));
      c.min_entry = std::min(c.min_entry, d(i, j));
      if (!std::isfinite(d(i, j))) c.ok = false;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double dij = d(i, j);
      for (std::size_t k = 0; k < n; ++k)
        c.max_triangle_excess = std::max(c.max_triangle_excess, d(i, k) - dij - d(j, k));
    }
  c.ok = c.ok && c.max_diagonal == 0.0 && c.max_asymmetry == 0.0 && c.min_entry >= 0.0 &&
         c.max_triangle_excess <= slack;
  return c;
}

Matrix shortest_path_closure(Matrix d) {
  const std::size_t n = d.rows();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = d(i, k);
      for (std::size_t j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), dik + d(k, j));
    }
  return d;
}

Matrix random_pseudometric(std::size_t n, double scale, std::mt19937_64& engine) {
  // States share one of k random points in [0,1]^3, so zero distances between
  // distinct states occur without collapsing the whole space.
  const std::size_t k = std::max<std::size_t>(2, (n + 1) / 2);
  std::vector<std::array<double, 3>> points(k);
  for (auto& p : points)
    for (double& x : p) x = unit_uniform(engine);
  std::vector<std::size_t> where(n);
  for (auto& w : where) w = uniform_index(engine, k);
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.0;
      for (std::size_t c = 0; c < 3; ++c)
        v = std::max(v, std::abs(points[where[i]][c] - points[where[j]][c]));
      d(i, j) = d(j, i) = scale * v;
    }
  return d;
}

MetricOperator::MetricOperator(const FiniteMdp& mdp, unsigned threads)
    : mdp_(mdp), threads_(std::max(1u, threads)) {}

Matrix MetricOperator::apply(const Matrix& d) const {
  const std::size_t n = mdp_.n_states();
  if (d.rows() != n || d.cols() != n) {
    std::ostringstream os;
    os << "metric is " << d.rows() << "x" << d.cols() << ", MDP has " << n << " states";
    throw StructuralError(os.str());
  }
  const std::size_t n_actions = mdp_.n_actions();
  const double gamma = mdp_.gamma();
  Matrix out(n, n);

  // Rows s are dealt round-robin to workers; each writes only out(s, t>s).
  auto work = [&](unsigned worker) {
    TransportSolver solver;
    for (std::size_t s = worker; s < n; s += threads_) {
      for (std::size_t t = s + 1; t < n; ++t) {
        double best = 0.0;
        for (ActionId a = 0; a < n_actions; ++a) {
          const double w = solver.distance(mdp_.next(s, a), mdp_.next(t, a), d);
          best = std::max(best, std::abs(mdp_.reward(s, a) - mdp_.reward(t, a)) + gamma * w);
        }
        out(s, t) = best;
      }
    }
  };
  if (threads_ == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads_; ++w) pool.emplace_back(work, w);
  }
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) out(t, s) = out(s, t);
  return out;
}

Matrix apply_operator(const FiniteMdp& m, const Matrix& d) {
  return MetricOperator(m).apply(d);
}

std::size_t default_iteration_cap(double tolerance, double gamma) {
  const double sweeps = std::ceil(std::log(tolerance) / std::log(gamma));
  return 10 * static_cast<std::size_t>(std::max(1.0, sweeps));
}

MetricRun solve_metric(const FiniteMdp& m, const MetricOptions& options) {
  if (!(options.tolerance > 0.0)) throw PreconditionError("tolerance must be positive");
  require_valid(m);
  const std::size_t cap = options.max_iterations
                              ? options.max_iterations
                              : default_iteration_cap(options.tolerance, m.gamma());
  MetricOperator op(m, options.threads);
  MetricRun run;
  Matrix current(m.n_states(), m.n_states());
  for (;;) {
    if (run.iterations >= cap) {
      std::ostringstream os;
      os << "metric iteration hit its cap of " << cap << " sweeps (last change "
         << (run.residuals.empty() ? 0.0 : run.residuals.back()) << ")";
      throw ConvergenceError(os.str());
    }
    Matrix next = op.apply(current);
    const double change = sup_distance(next, current);
    current = std::move(next);
    ++run.iterations;
    run.residuals.push_back(change);
#ifndef NDEBUG
    if (check_pseudometric(current).max_triangle_excess > kTriangleSlack)
      throw ConvergenceError("metric iterate violates the triangle inequality");
#endif
    if (change <= options.tolerance) break;
  }
  run.final = std::move(current);
  run.certified_error = run.residuals.back() * m.gamma() / (1.0 - m.gamma());
  return run;
}

MetricRun solve_metric(const FiniteMdp& m, double tolerance) {
  MetricOptions options;
  options.tolerance = tolerance;
  return solve_metric(m, options);
}

double residual_ratio(const std::vector<double>& residuals, double floor) {
  std::size_t first = residuals.size(), last = 0, count = 0;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    if (residuals[k] > 0.0 && residuals[k] >= floor) {
      first = std::min(first, k);
      last = k;
      ++count;
    } else if (count > 0) {
      break;
    }
  }
  if (count < 2) return 0.0;
  // Skip the transient: use the second half of the usable window.
  const std::size_t start = first + (last - first) / 2;
  if (start == last) return residuals[last] / residuals[last - 1];
  return std::pow(residuals[last] / residuals[start], 1.0 / static_cast<double>(last - start));
}

namespace {

ContractionEstimate random_pairs(const FiniteMdp& m, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw PreconditionError("trials must be at least 1");
  ContractionEstimate est;
  MetricOperator op(m);
  std::mt19937_64 engine(seed);
  const double scale = std::max(1.0, 2.0 * m.reward_bound() / (1.0 - m.gamma()));
  const std::size_t n = m.n_states();
  for (std::size_t k = 0; k < trials; ++k) {
    Matrix d1 = random_pseudometric(n, scale, engine);
    Matrix d2 = random_pseudometric(n, scale, engine);
    const double gap = sup_distance(d1, d2);
    if (gap == 0.0) continue;
    const double ratio = sup_distance(op.apply(d1), op.apply(d2)) / gap;
    est.random_pair_factor = std::max(est.random_pair_factor, ratio);
    ++est.pairs_used;
  }
  return est;
}

}  // namespace

ContractionEstimate estimate_contraction(const FiniteMdp& m, std::size_t trials,
                                         std::uint64_t seed, const MetricRun& run,
                                         double tolerance) {
  ContractionEstimate est = random_pairs(m, trials, seed);
  est.residual_ratio_factor = residual_ratio(run.residuals, 1e3 * tolerance);
  est.iterations = run.iterations;
  return est;
}

ContractionEstimate estimate_contraction(const FiniteMdp& m, std::size_t trials,
                                         std::uint64_t seed, const MetricOptions& options) {
  return estimate_contraction(m, trials, seed, solve_metric(m, options), options.tolerance);
}

}  // namespace bisim
