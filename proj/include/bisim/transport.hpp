#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bisim/matrix.hpp"

namespace bisim {

inline constexpr double kDistributionTolerance = 1e-12;
inline constexpr double kMarginalTolerance = 1e-9;
inline constexpr double kDualityGapTolerance = 1e-7;

/// Probability vector over a support of fixed size.
class DiscreteDistribution {
 public:
  /// Throws PreconditionError unless weights are finite, >= 0 and sum to 1.
  explicit DiscreteDistribution(std::vector<double> weights);
  static DiscreteDistribution dirac(std::size_t n, std::size_t at);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

struct TransportSolution {
  double value = 0.0;
  Matrix coupling;
  std::vector<double> dual_f;
  std::vector<double> dual_g;
  /// value - (<dual_f, mu> + <dual_g, nu>)
  double gap = 0.0;
  std::size_t pivots = 0;
};

/**
 * Exact transportation-problem solver (network simplex).
 *
 * The instance is compacted to the supports of mu and nu; zero-mass points
 * get zero coupling rows/columns and dual potentials chosen so that
 * f_i + g_j <= cost(i, j) holds over the full index set. The entering arc
 * has the most negative reduced cost (lowest index on ties); the leaving
 * arc is the last blocking arc met when walking the pivot cycle from its
 * apex, which keeps the spanning tree strongly feasible so degenerate
 * pivots cannot cycle.
 *
 * A solver owns its working memory: one instance per thread.
 */
class TransportSolver {
 public:
  /// Full solve with coupling and certified duals.
  TransportSolution solve(std::span<const double> mu, std::span<const double> nu,
                          const Matrix& cost);

  /// Optimal value only. Inputs are trusted (no validation).
  double distance(std::span<const double> mu, std::span<const double> nu,
                  const Matrix& cost);

 private:
  void compact(std::span<const double> mu, std::span<const double> nu, const Matrix& cost);
  void run();
  void rebuild_tree();
  double compact_value() const;

  // Compacted instance.
  std::vector<std::size_t> src_, dst_;
  std::vector<double> supply_, demand_;
  std::vector<double> cost_;  // src_.size() x dst_.size()

  // Network state. Nodes: sources, sinks, root. Arcs: real (row-major), then
  // one artificial arc per source (source -> root) and per sink (root -> sink).
  std::vector<std::size_t> tail_, head_;
  std::vector<double> arc_cost_, flow_;
  std::vector<char> in_tree_;
  std::vector<std::size_t> tree_arcs_;
  std::vector<double> potential_;
  std::vector<std::size_t> parent_, parent_arc_, depth_;
  std::vector<std::size_t> adj_start_, adj_;
  std::vector<std::size_t> queue_;
  std::vector<std::size_t> up_k_, up_l_;
  std::size_t pivots_ = 0;
};

/// Exact W1 between mu and nu under `cost` (n x n, finite, >= 0).
TransportSolution w1_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                           const Matrix& cost);

/// Closed-form 1-D W1 with ground cost |i - j|: sum_k |F_mu(k) - F_nu(k)|.
double w1_line_oracle(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// |primal - dual| for a solution of (mu, nu).
double kr_gap(const TransportSolution& sol, const DiscreteDistribution& mu,
              const DiscreteDistribution& nu);

/// JSON dump of a solution for failure triage.
std::string to_json(const TransportSolution& sol);

}  // namespace bisim
