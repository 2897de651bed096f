#include "bisim/planning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"

namespace bisim {

namespace {

double backup(const FiniteMdp& m, StateId s, ActionId a, std::span<const double> v) {
  auto row = m.next(s, a);
  double expect = 0.0;
  for (StateId t = 0; t < row.size(); ++t) expect += row[t] * v[t];
  return m.reward(s, a) + m.gamma() * expect;
}

void require_tolerance(double tolerance) {
  if (!(tolerance > 0.0)) throw PreconditionError("tolerance must be positive");
}

[[noreturn]] void iteration_cap_hit(const char* what, std::size_t cap) {
  std::ostringstream os;
  os << what << " did not converge within " << cap << " sweeps";
  throw ConvergenceError(os.str());
}

}  // namespace

ValueFunction value_iteration(const FiniteMdp& m, double tolerance) {
  require_tolerance(tolerance);
  require_valid(m);
  const std::size_t n = m.n_states();
  const std::size_t cap = default_iteration_cap(tolerance, m.gamma());
  ValueFunction v(n, 0.0), next(n);
  for (std::size_t it = 0;; ++it) {
    if (it >= cap) iteration_cap_hit("value iteration", cap);
    for (StateId s = 0; s < n; ++s) {
      double best = backup(m, s, 0, v);
      for (ActionId a = 1; a < m.n_actions(); ++a) best = std::max(best, backup(m, s, a, v));
      next[s] = best;
    }
    const double change = sup_distance(next, v);
    v.swap(next);
    if (change <= tolerance) return v;
  }
}

Policy greedy_policy(const FiniteMdp& m, std::span<const double> v) {
  if (v.size() != m.n_states()) throw StructuralError("value function size mismatch");
  Policy p(m.n_states(), 0);
  for (StateId s = 0; s < m.n_states(); ++s) {
    double best = backup(m, s, 0, v);
    for (ActionId a = 1; a < m.n_actions(); ++a) {
      const double q = backup(m, s, a, v);
      if (q > best) {
        best = q;
        p[s] = a;
      }
    }
  }
  return p;
}

ValueFunction policy_value(const FiniteMdp& m, std::span<const ActionId> policy,
                           double tolerance) {
  require_tolerance(tolerance);
  if (policy.size() != m.n_states()) throw StructuralError("policy size mismatch");
  for (ActionId a : policy)
    if (a >= m.n_actions()) throw StructuralError("policy action out of range");
  const std::size_t n = m.n_states();
  const std::size_t cap = default_iteration_cap(tolerance, m.gamma());
  ValueFunction v(n, 0.0), next(n);
  for (std::size_t it = 0;; ++it) {
    if (it >= cap) iteration_cap_hit("policy evaluation", cap);
    for (StateId s = 0; s < n; ++s) next[s] = backup(m, s, policy[s], v);
    const double change = sup_distance(next, v);
    v.swap(next);
    if (change <= tolerance) return v;
  }
}

Policy lift_policy(const EpsilonQuotient& q, std::span<const ActionId> abstract) {
  if (abstract.size() != q.class_count())
    throw StructuralError("abstract policy must have one action per class");
  Policy lifted(q.partition.size());
  for (StateId s = 0; s < lifted.size(); ++s) lifted[s] = abstract[q.partition.class_of[s]];
  return lifted;
}

ValueLossReport value_loss_report(const FiniteMdp& m, const Matrix& d_m, double epsilon,
                                  const PlanningTolerances& tol) {
  ValueLossReport r;
  r.epsilon = epsilon;
  r.gamma = m.gamma();
  const EpsilonQuotient q = make_quotient(d_m, epsilon);
  r.classes = q.class_count();
  for (double d : q.intra_diameters) r.max_intra_diameter = std::max(r.max_intra_diameter, d);

  const FiniteMdp abstract = build_abstract_mdp(m, q.partition);
  const ValueFunction abstract_v = value_iteration(abstract, tol.value);
  r.lifted_policy = lift_policy(q, greedy_policy(abstract, abstract_v));
  r.v_star = value_iteration(m, tol.value);
  r.v_lifted = policy_value(m, r.lifted_policy, tol.value);
  r.loss = sup_distance(r.v_star, r.v_lifted);

  r.bound_eps = 2.0 * epsilon / (1.0 - m.gamma());
  r.bound_diam = 2.0 * r.max_intra_diameter / (1.0 - m.gamma());
  r.within_eps_bound = r.loss <= r.bound_eps + kValueLossSlack;
  r.within_diam_bound = r.loss <= r.bound_diam + kValueLossSlack;
  return r;
}

ValueLossReport value_loss_report(const FiniteMdp& m, double epsilon,
                                  const PlanningTolerances& tol) {
  MetricOptions options;
  options.tolerance = tol.metric;
  return value_loss_report(m, solve_metric(m, options).final, epsilon, tol);
}

}  // namespace bisim
