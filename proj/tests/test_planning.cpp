#include <doctest.h>

#include <cmath>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/planning.hpp"

using namespace bisim;

TEST_CASE("chain values") {
  const FiniteMdp m = make_chain_example();
  const ValueFunction v = value_iteration(m, 1e-9);
  CHECK(std::abs(v[0] - 0.9) <= 1e-9);
  CHECK(std::abs(v[1] - 1.0) <= 1e-9);
  CHECK(std::abs(v[2] - 0.0) <= 1e-9);
  const Policy pi = greedy_policy(m, v);
  CHECK(pi == Policy{0, 0, 0});
  const ValueFunction vp = policy_value(m, pi, 1e-9);
  CHECK(std::abs(vp[0] - 0.9) <= 1e-9);
  CHECK(std::abs(vp[1] - 1.0) <= 1e-9);
}

TEST_CASE("absorbing state values follow the geometric series") {
  const FiniteMdp zero(2, 2, 0.8, {1, 0, 0, 1, 0, 1, 1, 0}, {0, 0, 0, 0});
  for (double x : value_iteration(zero)) CHECK(x == 0.0);
  const FiniteMdp one(1, 1, 0.75, {1.0}, {2.0});
  CHECK(value_iteration(one, 1e-12)[0] == doctest::Approx(2.0 / 0.25));
}

TEST_CASE("greedy policy prefers the dominating action and breaks ties low") {
  // Action 1 pays more everywhere with the same transitions.
  const FiniteMdp m(2, 2, 0.9, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, {0.0, 1.0, 0.2, 0.7});
  CHECK(greedy_policy(m, value_iteration(m)) == Policy{1, 1});
  const FiniteMdp tie(1, 3, 0.9, {1, 1, 1}, {0.5, 0.5, 0.5});
  CHECK(greedy_policy(tie, value_iteration(tie)) == Policy{0});
  CHECK_THROWS_AS(greedy_policy(m, std::vector<double>{1.0}), StructuralError);
}

TEST_CASE("greedy policy of V* recovers V*") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp m = make_random_mdp(6, 3, 0.9, seed);
    const double tol = 1e-10;
    const ValueFunction v = value_iteration(m, tol);
    const ValueFunction vp = policy_value(m, greedy_policy(m, v), tol);
    for (std::size_t s = 0; s < v.size(); ++s)
      REQUIRE(std::abs(v[s] - vp[s]) <= 2.0 * tol / (1.0 - m.gamma()));
    for (double x : v) REQUIRE(std::abs(x) <= m.reward_bound() / (1.0 - m.gamma()) + 1e-9);
  }
}

TEST_CASE("lifting is constant on classes") {
  const Matrix d = solve_metric(make_chain_example()).final;
  const EpsilonQuotient q = make_quotient(d, 0.95);
  const Policy lifted = lift_policy(q, Policy{0, 0});
  CHECK(lifted == Policy{0, 0, 0});
  CHECK(check_factorization(q, lifted));
  CHECK_THROWS_AS(lift_policy(q, Policy{0}), StructuralError);
  const EpsilonQuotient single = make_quotient(d, 0.0);
  CHECK(lift_policy(single, Policy{0, 0, 0}) == Policy{0, 0, 0});
}

TEST_CASE("value loss of the chain abstraction") {
  const ValueLossReport r = value_loss_report(make_chain_example(), 0.95);
  CHECK(r.classes == 2);
  CHECK(r.loss == doctest::Approx(0.0));
  CHECK(r.bound_eps == doctest::Approx(2 * 0.95 / 0.1));
  CHECK(r.bound_diam == doctest::Approx(2 * 0.9 / 0.1));
  CHECK(r.within_diam_bound);
  CHECK(r.within_eps_bound);
}

TEST_CASE("identity abstraction loses nothing") {
  const FiniteMdp m = make_random_mdp(6, 3, 0.9, 4);
  const ValueLossReport r = value_loss_report(m, 0.0);
  CHECK(r.classes == 6);
  CHECK(r.loss <= 2e-9 / (1.0 - 0.9));
}

TEST_CASE("value function is 1-Lipschitz in the metric and the loss respects the diameter bound") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const FiniteMdp m = make_random_mdp(2 + seed % 8, 1 + seed % 4, 0.9, seed);
    const Matrix d = solve_metric(m).final;
    const ValueLossReport r = value_loss_report(m, d, 0.1 * d.max_abs());
    for (std::size_t s = 0; s < m.n_states(); ++s)
      for (std::size_t t = 0; t < m.n_states(); ++t)
        REQUIRE(std::abs(r.v_star[s] - r.v_star[t]) <= d(s, t) + 1e-7);
    REQUIRE(r.loss <= r.bound_diam + kValueLossSlack);
    if (m.n_actions() == 1) REQUIRE(r.loss <= 1e-7);
  }
}
