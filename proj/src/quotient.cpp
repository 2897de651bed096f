#include "bisim/quotient.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"

namespace bisim {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

void require_square(const Matrix& d) {
  if (!d.square()) throw StructuralError("distance matrix must be square");
}

void require_partition(const Matrix& d, const Partition& p) {
  require_square(d);
  if (p.size() != d.rows()) {
    std::ostringstream os;
    os << "partition covers " << p.size() << " states, matrix has " << d.rows();
    throw StructuralError(os.str());
  }
}

}  // namespace

std::vector<std::vector<StateId>> Partition::members() const {
  std::vector<std::vector<StateId>> out(class_count);
  for (StateId s = 0; s < class_of.size(); ++s) out[class_of[s]].push_back(s);
  return out;
}

Partition Partition::singletons(std::size_t n) {
  Partition p;
  p.class_of.resize(n);
  std::iota(p.class_of.begin(), p.class_of.end(), ClassId{0});
  p.class_count = n;
  return p;
}

Partition Partition::single_class(std::size_t n) {
  Partition p;
  p.class_of.assign(n, 0);
  p.class_count = n ? 1 : 0;
  return p;
}

Partition Partition::from_labels(std::span<const std::size_t> labels) {
  Partition p;
  p.class_of.resize(labels.size());
  std::vector<std::pair<std::size_t, ClassId>> seen;
  for (StateId s = 0; s < labels.size(); ++s) {
    auto it = std::find_if(seen.begin(), seen.end(),
                           [&](const auto& e) { return e.first == labels[s]; });
    if (it == seen.end()) {
      seen.emplace_back(labels[s], p.class_count);
      p.class_of[s] = p.class_count++;
    } else {
      p.class_of[s] = it->second;
    }
  }
  return p;
}

Partition epsilon_classes(const Matrix& d, double epsilon) {
  require_square(d);
  if (!(epsilon >= 0.0)) throw PreconditionError("epsilon must be nonnegative");
  const std::size_t n = d.rows();
  DisjointSets sets(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t)
      if (d(s, t) <= epsilon) sets.unite(s, t);
  std::vector<std::size_t> roots(n);
  for (std::size_t s = 0; s < n; ++s) roots[s] = sets.find(s);
  return Partition::from_labels(roots);
}

Matrix min_link_matrix(const Matrix& d, const Partition& p) {
  require_partition(d, p);
  const std::size_t k = p.class_count;
  Matrix out(k, k, std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < d.rows(); ++s)
    for (std::size_t t = 0; t < d.rows(); ++t) {
      double& cell = out(p.class_of[s], p.class_of[t]);
      cell = std::min(cell, d(s, t));
    }
  for (std::size_t c = 0; c < k; ++c) out(c, c) = 0.0;
  return out;
}

Matrix quotient_metric(const Matrix& d, const Partition& p) {
  return shortest_path_closure(min_link_matrix(d, p));
}

std::vector<double> intra_class_diameters(const Matrix& d, const Partition& p) {
  require_partition(d, p);
  std::vector<double> diam(p.class_count, 0.0);
  for (std::size_t s = 0; s < d.rows(); ++s)
    for (std::size_t t = s + 1; t < d.rows(); ++t)
      if (p.class_of[s] == p.class_of[t])
        diam[p.class_of[s]] = std::max(diam[p.class_of[s]], d(s, t));
  return diam;
}

EpsilonQuotient make_quotient(const Matrix& d, double epsilon) {
  EpsilonQuotient q;
  q.epsilon = epsilon;
  q.partition = epsilon_classes(d, epsilon);
  q.class_members = q.partition.members();
  q.d_min = min_link_matrix(d, q.partition);
  q.d_q = shortest_path_closure(q.d_min);
  q.intra_diameters = intra_class_diameters(d, q.partition);
  return q;
}

FiniteMdp build_abstract_mdp(const FiniteMdp& m, const Partition& p,
                             std::span<const double> weights) {
  if (p.size() != m.n_states()) throw StructuralError("partition does not match the MDP");
  if (!weights.empty() && weights.size() != m.n_states())
    throw StructuralError("aggregation weights need one entry per state");

  const std::size_t k = p.class_count;
  std::vector<double> w(m.n_states(), 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  std::vector<double> class_total(k, 0.0);
  for (StateId s = 0; s < m.n_states(); ++s) {
    if (!(w[s] >= 0.0)) throw PreconditionError("aggregation weights must be nonnegative");
    class_total[p.class_of[s]] += w[s];
  }
  for (double t : class_total)
    if (!(t > 0.0)) throw PreconditionError("every class needs positive total weight");

  FiniteMdp out(k, m.n_actions(), m.gamma());
  for (StateId s = 0; s < m.n_states(); ++s) {
    const ClassId c = p.class_of[s];
    const double share = w[s] / class_total[c];
    if (share == 0.0) continue;
    for (ActionId a = 0; a < m.n_actions(); ++a) {
      out.reward(c, a) += share * m.reward(s, a);
      auto src = m.next(s, a);
      auto dst = out.next(c, a);
      for (StateId t = 0; t < m.n_states(); ++t) dst[p.class_of[t]] += share * src[t];
    }
  }
  return out;
}

Matrix pullback_metric(const EpsilonQuotient& q, std::size_t n) {
  if (q.partition.size() != n) throw StructuralError("quotient does not cover 0..n-1");
  Matrix out(n, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      out(s, t) = q.d_q(q.partition.class_of[s], q.partition.class_of[t]);
  return out;
}

bool check_factorization(const EpsilonQuotient& q, std::span<const std::size_t> phi) {
  if (phi.size() != q.partition.size()) throw StructuralError("phi must be total on states");
  for (const auto& members : q.class_members)
    for (StateId s : members)
      if (phi[s] != phi[members.front()]) return false;
  return true;
}

IdempotenceReport idempotence_check(const FiniteMdp& m, const Matrix& d_m, double epsilon,
                                    double tolerance) {
  if (!(tolerance > 0.0)) throw PreconditionError("tolerance must be positive");
  IdempotenceReport r;
  r.epsilon = epsilon;
  const EpsilonQuotient first = make_quotient(d_m, epsilon);
  r.classes = first.class_count();

  const EpsilonQuotient second = make_quotient(first.d_q, epsilon);
  r.requotient_classes = second.class_count();
  r.bijection = second.class_count() == first.class_count();
  r.drift = r.bijection ? sup_distance(first.d_q, second.d_q)
                        : std::numeric_limits<double>::infinity();

  const FiniteMdp abstract = build_abstract_mdp(m, first.partition);
  MetricOptions options;
  options.tolerance = std::min(tolerance, kDefaultMetricTolerance);
  const Matrix abstract_metric = solve_metric(abstract, options).final;
  const Partition abstract_partition = epsilon_classes(abstract_metric, epsilon);
  r.abstract_classes = abstract_partition.class_count;
  r.abstract_bijection = abstract_partition.class_count == first.class_count();
  r.abstract_metric_shift = sup_distance(abstract_metric, first.d_q);

  r.ok = r.bijection && r.drift <= tolerance;
  return r;
}

IdempotenceReport idempotence_check(const FiniteMdp& m, double epsilon, double tolerance) {
  MetricOptions options;
  options.tolerance = std::min(tolerance, kDefaultMetricTolerance);
  return idempotence_check(m, solve_metric(m, options).final, epsilon, tolerance);
}

}  // namespace bisim
