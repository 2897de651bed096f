#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/random.hpp"
#include "support.hpp"

using namespace bisim;

namespace {

FiniteMdp two_state(std::mt19937_64& rng, std::size_t actions, double gamma) {
  std::vector<double> p, r;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < actions; ++a) {
      const double x = unit_uniform(rng);
      p.push_back(x);
      p.push_back(1.0 - x);
      r.push_back(2.0 * unit_uniform(rng) - 1.0);
    }
  return FiniteMdp(2, actions, gamma, std::move(p), std::move(r));
}

// On two points W1 = d01 * |mu0 - nu0|, so each action is an affine map
// x -> r_a + gamma c_a x and the fixed point of their max is max_a r_a / (1 - gamma c_a).
double two_state_oracle(const FiniteMdp& m) {
  double best = 0.0;
  for (ActionId a = 0; a < m.n_actions(); ++a) {
    const double r = std::abs(m.reward(0, a) - m.reward(1, a));
    const double c = std::abs(m.transition(0, a, 0) - m.transition(1, a, 0));
    best = std::max(best, r / (1.0 - m.gamma() * c));
  }
  return best;
}

}  // namespace

TEST_CASE("operator iterates on the chain") {
  const FiniteMdp m = make_chain_example();
  const Matrix d1 = apply_operator(m, Matrix(3, 3));
  CHECK(d1(0, 1) == doctest::Approx(1.0));
  CHECK(d1(0, 2) == doctest::Approx(0.0));
  CHECK(d1(1, 2) == doctest::Approx(1.0));
  const Matrix d2 = apply_operator(m, d1);
  CHECK(d2(0, 2) == doctest::Approx(0.9));
}

TEST_CASE("chain metric converges to the hand-computed values") {
  const MetricRun run = solve_metric(make_chain_example(), 1e-9);
  CHECK(std::abs(run.final(0, 1) - 1.9) <= 1e-9);
  CHECK(std::abs(run.final(0, 2) - 0.9) <= 1e-9);
  CHECK(std::abs(run.final(1, 2) - 1.0) <= 1e-9);
  CHECK(run.iterations <= 4);
  CHECK(run.residuals.back() <= 1e-9);
  CHECK(run.certified_error ==
        doctest::Approx(run.residuals.back() * 0.9 / 0.1));
}

TEST_CASE("bisimilar states are at distance zero") {
  // Every state has the same successor row and constant reward.
  std::vector<double> p, r;
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      p.insert(p.end(), {0.1, 0.2, 0.3, 0.4});
      r.push_back(0.5);
    }
  const FiniteMdp m(4, 2, 0.9, p, r);
  CHECK(solve_metric(m).final.max_abs() == 0.0);
  const ContractionEstimate est = estimate_contraction(m, 5, 1);
  CHECK(est.random_pair_factor == 0.0);
}

TEST_CASE("two-state MDPs match the closed-form fixed point") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = std::array{0.5, 0.7, 0.9, 0.95}[trial % 4];
    const FiniteMdp m = two_state(rng, 1 + trial % 3, gamma);
    const MetricRun run = solve_metric(m, 1e-12);
    REQUIRE(run.final(0, 1) == doctest::Approx(two_state_oracle(m)).epsilon(1e-9));
  }
}

TEST_CASE("iterates increase monotonically and end near a fixed point") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FiniteMdp m = make_random_mdp(6, 3, 0.9, seed);
    Matrix d(6, 6);
    for (int k = 0; k < 30; ++k) {
      Matrix next = apply_operator(m, d);
      for (std::size_t i = 0; i < d.data().size(); ++i)
        REQUIRE(next.data()[i] >= d.data()[i] - 1e-12);
      d = std::move(next);
    }
    const double tol = 1e-9;
    const MetricRun run = solve_metric(m, tol);
    CHECK(sup_distance(run.final, apply_operator(m, run.final)) <= tol * (1.0 + m.gamma()));
    CHECK(check_pseudometric(run.final).ok);
    CHECK(run.final.max_abs() <= 2.0 * m.reward_bound() / (1.0 - m.gamma()));
  }
}

TEST_CASE("the operator is a gamma-contraction on random pseudometrics") {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp m = make_random_mdp(2 + seed % 8, 1 + seed % 4, 0.8, seed);
    for (int k = 0; k < 5; ++k) {
      const Matrix d1 = random_pseudometric(m.n_states(), 4.0, rng);
      const Matrix d2 = random_pseudometric(m.n_states(), 4.0, rng);
      REQUIRE(sup_distance(apply_operator(m, d1), apply_operator(m, d2)) <=
              m.gamma() * sup_distance(d1, d2) + 1e-9);
    }
  }
}

TEST_CASE("random pseudometrics satisfy the axioms and are not degenerate") {
  std::mt19937_64 rng(4);
  for (std::size_t n : {1, 2, 5, 25}) {
    const Matrix d = random_pseudometric(n, 3.0, rng);
    CHECK(check_pseudometric(d).ok);
    if (n >= 5) CHECK(d.max_abs() > 0.0);
  }
}

TEST_CASE("threaded sweeps agree with the serial sweep") {
  const FiniteMdp m = make_random_mdp(9, 3, 0.9, 5);
  MetricOptions serial, threaded;
  threaded.threads = 3;
  CHECK(solve_metric(m, serial).final == solve_metric(m, threaded).final);
}

TEST_CASE("contraction estimates stay below gamma") {
  const FiniteMdp m = make_random_mdp(6, 2, 0.9, 1);
  const ContractionEstimate est = estimate_contraction(m, 10, 2);
  CHECK(est.pairs_used == 10);
  CHECK(est.random_pair_factor > 0.0);
  CHECK(est.random_pair_factor <= 0.9 + 1e-9);
  CHECK(est.residual_ratio_factor <= 0.9 + 1e-6);
  CHECK_THROWS_AS(estimate_contraction(m, 0, 2), PreconditionError);
}

TEST_CASE("residual ratio of a geometric sequence") {
  std::vector<double> r;
  for (int k = 0; k < 40; ++k) r.push_back(std::pow(0.8, k));
  CHECK(residual_ratio(r, 0.0) == doctest::Approx(0.8));
  CHECK(residual_ratio({1.0}, 0.0) == 0.0);
}

TEST_CASE("iteration cap and preconditions") {
  CHECK(default_iteration_cap(1e-9, 0.9) == 1970);
  MetricOptions o;
  o.max_iterations = 5;
  CHECK_THROWS_AS(solve_metric(make_random_mdp(5, 2, 0.99, 0), o), ConvergenceError);
  o.max_iterations = 0;
  o.tolerance = 0.0;
  CHECK_THROWS_AS(solve_metric(make_chain_example(), o), PreconditionError);
  CHECK_THROWS_AS(apply_operator(make_chain_example(), Matrix(2, 2)), StructuralError);
}

TEST_CASE("pseudometric checker and closure") {
  Matrix d(3, 3);
  d(0, 1) = d(1, 0) = 1.0;
  d(1, 2) = d(2, 1) = 1.0;
  d(0, 2) = d(2, 0) = 3.0;
  const PseudoMetricCheck bad = check_pseudometric(d);
  CHECK_FALSE(bad.ok);
  CHECK(bad.max_triangle_excess == doctest::Approx(1.0));
  const Matrix closed = shortest_path_closure(d);
  CHECK(closed(0, 2) == 2.0);
  CHECK(check_pseudometric(closed).ok);
  d(0, 1) = 2.0;
  CHECK(check_pseudometric(d).max_asymmetry == doctest::Approx(1.0));
}
