#include "bisim/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/random.hpp"

namespace bisim {

namespace {

double lipschitz_excess(const Matrix& d_m, const ValueFunction& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < v.size(); ++s)
    for (std::size_t t = s + 1; t < v.size(); ++t)
      worst = std::max(worst, std::abs(v[s] - v[t]) - d_m(s, t));
  return v.size() < 2 ? 0.0 : worst;
}

MetricOptions metric_options(const PlanningTolerances& tol) {
  MetricOptions o;
  o.tolerance = tol.metric;
  return o;
}

}  // namespace

Objective make_objective(const std::string& name, double epsilon_fraction,
                         const PlanningTolerances& tol) {
  if (name == "constant") return [](const FiniteMdp&) { return 0.0; };
  auto loss = [epsilon_fraction, tol](const FiniteMdp& m) {
    const Matrix d = solve_metric(m, metric_options(tol)).final;
    return value_loss_report(m, d, epsilon_fraction * d.max_abs(), tol);
  };
  if (name == "loss_minus_diam_bound")
    return [loss](const FiniteMdp& m) {
      const auto r = loss(m);
      return r.loss - r.bound_diam;
    };
  if (name == "loss_minus_eps_bound")
    return [loss](const FiniteMdp& m) {
      const auto r = loss(m);
      return r.loss - r.bound_eps;
    };
  if (name == "value_loss") return [loss](const FiniteMdp& m) { return loss(m).loss; };
  if (name == "lipschitz_slack")
    return [tol](const FiniteMdp& m) {
      const Matrix d = solve_metric(m, metric_options(tol)).final;
      return lipschitz_excess(d, value_iteration(m, tol.value));
    };
  throw ConfigError("config key 'adversarial_objective' names an unknown objective '" + name +
                    "'");
}

InstanceInvariants check_instance_invariants(const FiniteMdp& m, double epsilon_fraction,
                                             std::size_t contraction_pairs, std::uint64_t seed,
                                             const PlanningTolerances& tol) {
  InstanceInvariants inv;
  const Matrix d = solve_metric(m, metric_options(tol)).final;

  MetricOperator op(m);
  std::mt19937_64 engine(seed);
  const double scale = std::max(1.0, 2.0 * m.reward_bound() / (1.0 - m.gamma()));
  inv.contraction_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < contraction_pairs; ++k) {
    const Matrix d1 = random_pseudometric(m.n_states(), scale, engine);
    const Matrix d2 = random_pseudometric(m.n_states(), scale, engine);
    inv.contraction_excess =
        std::max(inv.contraction_excess,
                 sup_distance(op.apply(d1), op.apply(d2)) - m.gamma() * sup_distance(d1, d2));
  }
  if (contraction_pairs == 0) inv.contraction_excess = 0.0;
  inv.contraction_ok = inv.contraction_excess <= kContractionSlack;

  inv.value_loss = value_loss_report(m, d, epsilon_fraction * d.max_abs(), tol);
  inv.lipschitz_excess = lipschitz_excess(d, inv.value_loss.v_star);
  inv.lipschitz_ok = inv.lipschitz_excess <= kLipschitzSlack;
  inv.ok = inv.contraction_ok && inv.lipschitz_ok && inv.value_loss.within_diam_bound;
  return inv;
}

AdversarialResult adversarial_search(const AdversarialConfig& config, std::uint64_t seed,
                                     const PlanningTolerances& tol, const Objective& objective) {
  const FiniteMdp base = make_random_mdp(config.states, config.actions, config.gamma,
                                         config.mdp_seed);
  const Objective fn =
      objective ? objective : make_objective(config.objective, config.epsilon_fraction, tol);
  const std::size_t dim = config.states * config.actions;
  const std::size_t pop = std::max<std::size_t>(
      4, std::min(config.population_per_dim * dim, config.population_cap));
  const double lo = -config.bound, hi = config.bound;

  std::mt19937_64 engine(seed);
  auto uniform = [&] { return lo + (hi - lo) * unit_uniform(engine); };
  auto evaluate = [&](const std::vector<double>& x) {
    FiniteMdp m = base;
    std::copy(x.begin(), x.end(), m.rewards().begin());
    return fn(m);
  };

  AdversarialResult result;
  result.population = pop;
  std::vector<std::vector<double>> members(pop, std::vector<double>(dim));
  std::vector<double> score(pop);
  for (auto& x : members)
    for (double& v : x) v = uniform();
  for (std::size_t i = 0; i < pop; ++i) score[i] = evaluate(members[i]);
  result.evaluations = pop;

  std::size_t best = static_cast<std::size_t>(
      std::max_element(score.begin(), score.end()) - score.begin());
  result.objective_trace.push_back(score[best]);

  std::vector<double> trial(dim);
  for (std::size_t gen = 0; gen < config.iterations; ++gen) {
    for (std::size_t i = 0; i < pop; ++i) {
      std::size_t r[3];
      for (std::size_t k = 0; k < 3; ++k) {
        do {
          r[k] = uniform_index(engine, pop);
        } while (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1]));
      }
      const std::size_t forced = uniform_index(engine, dim);
      for (std::size_t j = 0; j < dim; ++j) {
        if (j == forced || unit_uniform(engine) < config.crossover) {
          double v = members[r[0]][j] + config.mutation * (members[r[1]][j] - members[r[2]][j]);
          if (v < lo || v > hi) v = uniform();
          trial[j] = v;
        } else {
          trial[j] = members[i][j];
        }
      }
      const double s = evaluate(trial);
      ++result.evaluations;
      if (s >= score[i]) {
        members[i] = trial;
        score[i] = s;
        if (s > score[best]) best = i;
      }
    }
    result.objective_trace.push_back(score[best]);
  }
  result.generations = config.iterations;
  result.best_objective = score[best];

  result.worst_rewards = Matrix(config.states, config.actions);
  std::copy(members[best].begin(), members[best].end(), result.worst_rewards.data().begin());

  FiniteMdp worst = base;
  std::copy(members[best].begin(), members[best].end(), worst.rewards().begin());
  result.invariants = check_instance_invariants(worst, config.epsilon_fraction, 10, seed, tol);

  result.settings = {
      {"strategy", "rand1bin"},
      {"population", pop},
      {"mutation", config.mutation},
      {"crossover", config.crossover},
      {"iterations", config.iterations},
      {"bounds", {lo, hi}},
      {"objective", objective ? std::string("custom") : config.objective},
      {"epsilon_fraction", config.epsilon_fraction},
      {"mdp_seed", config.mdp_seed},
      {"seed", seed},
  };
  return result;
}

}  // namespace bisim
