#pragma once

#include <span>
#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"
#include "bisim/quotient.hpp"

namespace bisim {

using ValueFunction = std::vector<double>;
/// Deterministic policy: one action per state.
using Policy = std::vector<ActionId>;

/// Bellman optimality iteration from V = 0 until the sup-norm change <= tolerance.
ValueFunction value_iteration(const FiniteMdp& m, double tolerance = 1e-9);

/// argmax_a R(s,a) + gamma <P(s,a), v>, ties to the lowest action index.
Policy greedy_policy(const FiniteMdp& m, std::span<const double> v);

/// V^pi by fixed-point iteration of the policy's Bellman operator.
ValueFunction policy_value(const FiniteMdp& m, std::span<const ActionId> policy,
                           double tolerance = 1e-9);

/// lifted[s] = abstract[class(s)].
Policy lift_policy(const EpsilonQuotient& q, std::span<const ActionId> abstract);

struct PlanningTolerances {
  double metric = 1e-9;
  double value = 1e-9;
};

struct ValueLossReport {
  double epsilon = 0.0;
  double gamma = 0.0;
  std::size_t classes = 0;
  double max_intra_diameter = 0.0;
  /// max_s |V*(s) - V^{pi'}(s)| for the lifted abstract greedy policy pi'
  double loss = 0.0;
  double bound_eps = 0.0;   ///< 2 eps / (1 - gamma)
  double bound_diam = 0.0;  ///< 2 max_intra_diameter / (1 - gamma)
  bool within_eps_bound = false;
  bool within_diam_bound = false;
  ValueFunction v_star;
  ValueFunction v_lifted;
  Policy lifted_policy;
};

/// Slack allowed on the diameter bound.
inline constexpr double kValueLossSlack = 1e-6;

ValueLossReport value_loss_report(const FiniteMdp& m, double epsilon,
                                  const PlanningTolerances& tol = {});
/// Same, from a precomputed behavioural metric of m.
ValueLossReport value_loss_report(const FiniteMdp& m, const Matrix& d_m, double epsilon,
                                  const PlanningTolerances& tol = {});

}  // namespace bisim
