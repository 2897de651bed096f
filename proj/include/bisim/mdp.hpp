#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bisim/matrix.hpp"

namespace bisim {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Tolerance on |sum_s' P(s,a,s') - 1|.
inline constexpr double kRowSumTolerance = 1e-12;

/**
 * A finite discounted MDP (S, A, P, R, gamma).
 *
 * Transitions are stored as one dense row per (state, action) pair, so
 * `next(s, a)` is a distribution over all states. Construction checks only
 * shapes; use validate_mdp() to check stochasticity and finiteness.
 */
class FiniteMdp {
 public:
  FiniteMdp() = default;
  FiniteMdp(std::size_t n_states, std::size_t n_actions, double gamma);
  /// transitions: n_states*n_actions*n_states values in (s, a, s') order;
  /// rewards: n_states*n_actions values in (s, a) order.
  FiniteMdp(std::size_t n_states, std::size_t n_actions, double gamma,
            std::vector<double> transitions, std::vector<double> rewards);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }

  std::span<const double> next(StateId s, ActionId a) const {
    return {transitions_.data() + (s * n_actions_ + a) * n_states_, n_states_};
  }
  std::span<double> next(StateId s, ActionId a) {
    return {transitions_.data() + (s * n_actions_ + a) * n_states_, n_states_};
  }
  double reward(StateId s, ActionId a) const { return rewards_[s * n_actions_ + a]; }
  double& reward(StateId s, ActionId a) { return rewards_[s * n_actions_ + a]; }
  double transition(StateId s, ActionId a, StateId t) const { return next(s, a)[t]; }

  std::span<const double> transitions() const { return transitions_; }
  std::span<const double> rewards() const { return rewards_; }
  std::span<double> rewards() { return rewards_; }

  /// Largest |R(s,a)|; the recorded reward bound.
  double reward_bound() const;

  bool operator==(const FiniteMdp&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  double gamma_ = 0.9;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
};

enum class ViolationKind { RowSum, Negative, NonFinite, Discount };

struct Violation {
  ViolationKind kind;
  std::string location;
  double magnitude;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

std::string to_string(ViolationKind kind);

ValidationReport validate_mdp(const FiniteMdp& m);

/// Throws PreconditionError naming the first violation if `m` is not valid.
void require_valid(const FiniteMdp& m);

/// Three states, one action, R = (0, 1, 0), s1 -> s2 -> s3 -> s3, gamma 0.9.
FiniteMdp make_chain_example();

struct GridWorldSpec {
  std::size_t side = 5;
  double slip = 0.07;
  double gamma = 0.95;
  std::size_t goal = 24;
  double goal_reward = 1.0;
};

enum GridAction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/**
 * Grid world on side*side cells, state = row*side + col, actions
 * up/down/left/right. The intended move happens with probability 1-slip;
 * otherwise the agent moves to a uniformly chosen in-grid neighbour.
 * Moves off the grid leave the agent in place. The goal cell pays
 * goal_reward for every action. `seed` is accepted for interface
 * stability and does not affect the layout.
 */
FiniteMdp make_grid_world(const GridWorldSpec& spec, std::uint64_t seed = 0);

/**
 * Random MDP: every transition row ~ Dirichlet(1,...,1), every reward ~ U[-1,1].
 *
 * Sampling is defined independently of the standard library's distributions:
 * a std::mt19937_64 engine seeded with `seed`; u = (engine() >> 11) * 2^-53;
 * for each (s, a) in row-major order draw n exponentials e_i = -log1p(-u_i),
 * normalise them into the row, then draw the reward as 2u - 1.
 */
FiniteMdp make_random_mdp(std::size_t n, std::size_t m, double gamma, std::uint64_t seed);

/// New MDP whose action a' behaves as old action f[a'].
FiniteMdp reindex_actions(const FiniteMdp& m, std::span<const ActionId> f);

}  // namespace bisim
