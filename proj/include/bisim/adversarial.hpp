#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bisim/config.hpp"
#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"
#include "bisim/planning.hpp"

namespace bisim {

/// Scalar to maximise over reward matrices. Must be deterministic.
using Objective = std::function<double(const FiniteMdp&)>;

/**
 * Named objectives, each running the full metric/quotient/planning pipeline:
 *   loss_minus_diam_bound  value loss - 2 diam / (1 - gamma)   (default)
 *   loss_minus_eps_bound   value loss - 2 eps / (1 - gamma)
 *   value_loss             value loss
 *   lipschitz_slack        max_{s,t} |V*(s) - V*(t)| - d_M(s,t)
 *   constant               0
 * The quotient threshold is epsilon_fraction * diameter(d_M).
 */
Objective make_objective(const std::string& name, double epsilon_fraction,
                         const PlanningTolerances& tol = {});

/// Invariants checked on a single MDP.
struct InstanceInvariants {
  /// max over random pseudometric pairs of |Kd1 - Kd2| - gamma |d1 - d2|
  double contraction_excess = 0.0;
  bool contraction_ok = false;
  /// max_{s,t} |V*(s) - V*(t)| - d_M(s,t)
  double lipschitz_excess = 0.0;
  bool lipschitz_ok = false;
  ValueLossReport value_loss;
  bool ok = false;
};

inline constexpr double kContractionSlack = 1e-9;
inline constexpr double kLipschitzSlack = 1e-7;

InstanceInvariants check_instance_invariants(const FiniteMdp& m, double epsilon_fraction,
                                             std::size_t contraction_pairs, std::uint64_t seed,
                                             const PlanningTolerances& tol = {});

struct AdversarialResult {
  Matrix worst_rewards;  ///< n_states x n_actions
  double best_objective = 0.0;
  /// Best objective after each generation (index 0 = initial population).
  std::vector<double> objective_trace;
  std::size_t generations = 0;
  std::size_t evaluations = 0;
  std::size_t population = 0;
  InstanceInvariants invariants;
  nlohmann::json settings;
};

/**
 * Differential evolution (rand/1/bin) over rewards in [-bound, bound]^(n*m)
 * with the transitions of make_random_mdp(states, actions, gamma, mdp_seed).
 * Population min(population_per_dim * dim, population_cap). Trial
 * coordinates falling outside the box are redrawn uniformly inside it.
 * Runs exactly `iterations` generations.
 */
AdversarialResult adversarial_search(const AdversarialConfig& config, std::uint64_t seed,
                                     const PlanningTolerances& tol = {},
                                     const Objective& objective = {});

}  // namespace bisim
