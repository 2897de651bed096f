#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"

namespace bisim {

using ClassId = std::size_t;

/// Assignment of states to classes 0..class_count-1. Class ids follow the
/// order of each class's smallest member.
struct Partition {
  std::vector<ClassId> class_of;
  std::size_t class_count = 0;

  std::size_t size() const { return class_of.size(); }
  std::vector<std::vector<StateId>> members() const;

  static Partition singletons(std::size_t n);
  static Partition single_class(std::size_t n);
  /// Relabels arbitrary labels into canonical (smallest-member) order.
  static Partition from_labels(std::span<const std::size_t> labels);

  bool operator==(const Partition&) const = default;
};

/// Connected components of the graph {(s,t) : d(s,t) <= epsilon}.
Partition epsilon_classes(const Matrix& d, double epsilon);

/// D_min[c1,c2] = min over x in c1, y in c2 of d(x,y); zero diagonal.
Matrix min_link_matrix(const Matrix& d, const Partition& p);

/// Shortest-path closure of min_link_matrix: a pseudometric over classes.
Matrix quotient_metric(const Matrix& d, const Partition& p);

struct EpsilonQuotient {
  double epsilon = 0.0;
  Partition partition;
  std::vector<std::vector<StateId>> class_members;
  Matrix d_min;  ///< before closure, kept for inspection
  Matrix d_q;
  std::vector<double> intra_diameters;

  std::size_t class_count() const { return partition.class_count; }
  double compression_ratio() const {
    return static_cast<double>(partition.class_count) / static_cast<double>(partition.size());
  }
};

EpsilonQuotient make_quotient(const Matrix& d, double epsilon);

/// Per-class max of d between members (0 for singletons).
std::vector<double> intra_class_diameters(const Matrix& d, const Partition& p);

/**
 * Aggregated MDP with one state per class. Rewards and class-to-class
 * transition masses are weighted means over class members. `weights` is
 * either empty (uniform) or one nonnegative weight per state, with a
 * positive total inside every class.
 */
FiniteMdp build_abstract_mdp(const FiniteMdp& m, const Partition& p,
                             std::span<const double> weights = {});

/// p[s,t] = d_q[class(s), class(t)].
Matrix pullback_metric(const EpsilonQuotient& q, std::size_t n);

/// True iff phi is constant on every class of q, i.e. phi factors through
/// the canonical projection.
bool check_factorization(const EpsilonQuotient& q, std::span<const std::size_t> phi);

struct IdempotenceReport {
  double epsilon = 0.0;
  std::size_t classes = 0;
  /// Re-quotienting (classes, d_q) at epsilon.
  std::size_t requotient_classes = 0;
  bool bijection = false;
  double drift = 0.0;  ///< sup |d_q - d_q'|
  /// Re-quotienting the aggregated MDP's own behavioural metric at epsilon.
  std::size_t abstract_classes = 0;
  bool abstract_bijection = false;
  double abstract_metric_shift = 0.0;  ///< sup |d_M(abstract) - d_q|
  bool ok = false;
};

/// Q_eps applied twice. Reports findings instead of throwing on failure.
IdempotenceReport idempotence_check(const FiniteMdp& m, double epsilon, double tolerance);
/// Same, from a precomputed behavioural metric of m.
IdempotenceReport idempotence_check(const FiniteMdp& m, const Matrix& d_m, double epsilon,
                                    double tolerance);

}  // namespace bisim
