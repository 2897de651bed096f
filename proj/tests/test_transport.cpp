#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/random.hpp"
#include "bisim/transport.hpp"
#include "support.hpp"

using namespace bisim;
using testing::line_cost;
using testing::random_simplex;

namespace {

void check_certificate(const TransportSolution& sol, const DiscreteDistribution& mu,
                       const DiscreteDistribution& nu, const Matrix& cost) {
  const std::size_t n = mu.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(sol.coupling(i, j) >= -1e-12);
      row += sol.coupling(i, j);
      col += sol.coupling(j, i);
      REQUIRE(sol.dual_f[i] + sol.dual_g[j] <= cost(i, j) + 1e-9);
    }
    REQUIRE(std::abs(row - mu[i]) <= 1e-9);
    REQUIRE(std::abs(col - nu[i]) <= 1e-9);
  }
  double primal = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) primal += cost(i, j) * sol.coupling(i, j);
  REQUIRE(std::abs(primal - sol.value) <= 1e-9);
  REQUIRE(kr_gap(sol, mu, nu) <= kDualityGapTolerance);
}

// Uniform measures on k points: by Birkhoff the optimum is attained at a
// permutation, so brute force over permutations is an exact oracle.
double permutation_oracle(const Matrix& cost) {
  std::vector<std::size_t> perm(cost.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost(i, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(cost.rows());
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(DiscreteDistribution({0.5, 0.6}), PreconditionError);
  CHECK_THROWS_AS(DiscreteDistribution({-0.1, 1.1}), PreconditionError);
  CHECK_THROWS_AS(DiscreteDistribution({}), PreconditionError);
  CHECK_NOTHROW(DiscreteDistribution({0.25, 0.75}));
  CHECK(DiscreteDistribution::dirac(4, 2)[2] == 1.0);
}

TEST_CASE("dirac to dirac costs the ground distance") {
  Matrix cost(3, 3);
  cost(0, 2) = cost(2, 0) = 2.5;
  cost(0, 1) = cost(1, 0) = 1.0;
  cost(1, 2) = cost(2, 1) = 1.5;
  const auto sol = w1_exact(DiscreteDistribution::dirac(3, 0), DiscreteDistribution::dirac(3, 2), cost);
  CHECK(sol.value == doctest::Approx(2.5));
  CHECK(sol.coupling(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("identical marginals give zero cost and the diagonal coupling") {
  const DiscreteDistribution mu({0.2, 0.3, 0.5});
  const auto sol = w1_exact(mu, mu, line_cost(3));
  CHECK(sol.value == doctest::Approx(0.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(sol.coupling(i, i) == doctest::Approx(mu[i]));
  CHECK(kr_gap(sol, mu, mu) <= 1e-12);
}

TEST_CASE("shifted half masses on a line") {
  const DiscreteDistribution mu({0.5, 0.5, 0.0});
  const DiscreteDistribution nu({0.0, 0.5, 0.5});
  CHECK(w1_line_oracle(mu, nu) == doctest::Approx(1.0));
  const auto sol = w1_exact(mu, nu, line_cost(3));
  CHECK(sol.value == doctest::Approx(1.0));
  check_certificate(sol, mu, nu, line_cost(3));
  CHECK(w1_line_oracle(DiscreteDistribution::dirac(4, 0), DiscreteDistribution::dirac(4, 3)) == 3.0);
}

TEST_CASE("random line instances match the CDF oracle with certified duals") {
  std::mt19937_64 rng(11);
  TransportSolver solver;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 24;
    const DiscreteDistribution mu(random_simplex(n, rng, 0.3));
    const DiscreteDistribution nu(random_simplex(n, rng, 0.3));
    const Matrix cost = line_cost(n);
    const auto sol = w1_exact(mu, nu, cost);
    REQUIRE(std::abs(sol.value - w1_line_oracle(mu, nu)) <= 1e-9);
    check_certificate(sol, mu, nu, cost);
    REQUIRE(std::abs(solver.distance(mu.weights(), nu.weights(), cost) - sol.value) <= 1e-12);
  }
}

TEST_CASE("general costs match the permutation oracle on uniform marginals") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    Matrix cost(n, n);
    for (double& c : cost.data()) c = std::floor(10.0 * unit_uniform(rng));
    const DiscreteDistribution u(std::vector<double>(n, 1.0 / double(n)));
    const auto sol = w1_exact(u, u, cost);
    REQUIRE(sol.value == doctest::Approx(permutation_oracle(cost)).epsilon(1e-12));
    check_certificate(sol, u, u, cost);
  }
}

TEST_CASE("solving with swapped marginals and transposed cost is symmetric") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 9;
    Matrix cost(n, n);
    for (double& c : cost.data()) c = unit_uniform(rng);
    const DiscreteDistribution mu(random_simplex(n, rng, 0.2));
    const DiscreteDistribution nu(random_simplex(n, rng, 0.2));
    CHECK(w1_exact(mu, nu, cost).value ==
          doctest::Approx(w1_exact(nu, mu, cost.transposed()).value).epsilon(1e-9));
  }
}

TEST_CASE("W1 over a pseudometric satisfies the triangle inequality") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const Matrix d = random_pseudometric(n, 3.0, rng);
    const DiscreteDistribution a(random_simplex(n, rng)), b(random_simplex(n, rng)),
        c(random_simplex(n, rng));
    REQUIRE(w1_exact(a, c, d).value <= w1_exact(a, b, d).value + w1_exact(b, c, d).value + 1e-8);
  }
}

TEST_CASE("W1 is 1-Lipschitz in the ground metric") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const Matrix d1 = random_pseudometric(n, 2.0, rng);
    const Matrix d2 = random_pseudometric(n, 2.0, rng);
    const DiscreteDistribution mu(random_simplex(n, rng)), nu(random_simplex(n, rng));
    REQUIRE(std::abs(w1_exact(mu, nu, d1).value - w1_exact(mu, nu, d2).value) <=
            sup_distance(d1, d2) + 1e-9);
  }
}

TEST_CASE("bad inputs are rejected") {
  const DiscreteDistribution mu({0.5, 0.5});
  const DiscreteDistribution three({0.2, 0.3, 0.5});
  CHECK_THROWS_AS(w1_exact(mu, three, line_cost(2)), PreconditionError);
  CHECK_THROWS_AS(w1_exact(mu, mu, line_cost(3)), StructuralError);
  Matrix negative = line_cost(2);
  negative(0, 1) = -1.0;
  CHECK_THROWS_AS(w1_exact(mu, mu, negative), PreconditionError);
}

TEST_CASE("solution dump is JSON") {
  const DiscreteDistribution mu({0.5, 0.5});
  const std::string js = to_json(w1_exact(mu, mu, line_cost(2)));
  CHECK(js.find("\"value\"") != std::string::npos);
}
