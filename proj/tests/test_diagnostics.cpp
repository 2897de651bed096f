#include <doctest.h>

#include <cmath>
#include <random>

#include "bisim/diagnostics.hpp"
#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/random.hpp"

using namespace bisim;

namespace {

Matrix symmetric(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

double reconstruction_error(const Matrix& a, const EigenDecomposition& e) {
  const std::size_t n = a.rows();
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double r = 0.0;
      for (std::size_t k = 0; k < n; ++k) r += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
      err += (r - a(i, j)) * (r - a(i, j));
      norm += a(i, j) * a(i, j);
    }
  return std::sqrt(err) / std::max(std::sqrt(norm), 1e-300);
}

}  // namespace

TEST_CASE("eigenvalues of small matrices") {
  auto e = symmetric_eigs(Matrix::identity(4));
  for (double v : e.values) CHECK(v == doctest::Approx(1.0));
  e = symmetric_eigs(symmetric({{1, 0}, {0, 3}}));
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  e = symmetric_eigs(symmetric({{0, 1}, {1, 0}}));
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(symmetric_eigs(symmetric({{0, 1}, {2, 0}})), StructuralError);
}

TEST_CASE("eigendecomposition reconstructs random symmetric matrices") {
  std::mt19937_64 rng(6);
  for (std::size_t n : {1, 2, 5, 12, 30}) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = 2.0 * unit_uniform(rng) - 1.0;
    const EigenDecomposition e = symmetric_eigs(a);
    CHECK(reconstruction_error(a, e) <= 1e-8);
    double trace = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    for (double v : e.values) sum += v;
    CHECK(std::abs(trace - sum) <= 1e-8 * std::max(1.0, std::abs(trace)));
    for (std::size_t k = 1; k < n; ++k)
      CHECK(std::abs(e.values[k - 1]) >= std::abs(e.values[k]));
    // Columns are orthonormal.
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += e.vectors(i, p) * e.vectors(i, q);
        CHECK(dot == doctest::Approx(p == q ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
      }
  }
}

TEST_CASE("summary statistics over the upper triangle") {
  const Matrix d = solve_metric(make_chain_example(), 1e-12).final;
  const SummaryStats s = summary_stats(d);
  const double mean = (1.9 + 1.0 + 0.9) / 3.0;
  const double var =
      ((1.9 - mean) * (1.9 - mean) + (1.0 - mean) * (1.0 - mean) + (0.9 - mean) * (0.9 - mean)) /
      3.0;
  CHECK(s.mean == doctest::Approx(mean));
  CHECK(s.std == doctest::Approx(std::sqrt(var)));
  CHECK(summary_stats(Matrix(4, 4)).mean == 0.0);
  Matrix c(4, 4, 2.5);
  for (std::size_t i = 0; i < 4; ++i) c(i, i) = 0.0;
  CHECK(summary_stats(c).mean == doctest::Approx(2.5));
  CHECK(summary_stats(c).std == doctest::Approx(0.0));
  CHECK_THROWS_AS(summary_stats(Matrix(1, 1)), PreconditionError);
}

TEST_CASE("spectral report of a constant off-diagonal matrix") {
  const double c = 2.0;
  const Matrix d = symmetric({{0, c, c}, {c, 0, c}, {c, c, 0}});
  const SpectralReport r = spectral_report(d);
  REQUIRE(r.eigenvalues.size() == 3);
  CHECK(r.eigenvalues[0] == doctest::Approx(2 * c));
  CHECK(r.eigenvalues[1] == doctest::Approx(-c));
  CHECK(r.eigenvalues[2] == doctest::Approx(-c));
  const double h = -(0.5 * std::log(0.5) + 2 * 0.25 * std::log(0.25));
  CHECK(r.eigen_entropy == doctest::Approx(h));
  CHECK(r.eigen_entropy == doctest::Approx(1.0397).epsilon(1e-4));
  CHECK(r.spectral_radius == doctest::Approx(2 * c));
  CHECK(r.frobenius == doctest::Approx(std::sqrt(6.0) * c));
  CHECK(r.condition_number == doctest::Approx(2.0));
  CHECK(r.spectral_radius <= r.frobenius);
}

TEST_CASE("zero matrix flags undefined quantities") {
  const SpectralReport r = spectral_report(Matrix(3, 3));
  CHECK(r.frobenius == 0.0);
  CHECK_FALSE(r.entropy_defined);
  CHECK_FALSE(r.condition_defined);
}

TEST_CASE("double centring recovers the Gram matrix of collinear points") {
  // Points 0, 1, 3 on a line; centred coordinates -4/3, -1/3, 5/3.
  const Matrix d = symmetric({{0, 1, 3}, {1, 0, 2}, {3, 2, 0}});
  const SpectralReport r = spectral_report(d, SpectralMode::DoubleCentered);
  CHECK(r.eigenvalues[0] == doctest::Approx(42.0 / 9.0));
  CHECK(std::abs(r.eigenvalues[1]) <= 1e-12);
  CHECK(std::abs(r.eigenvalues[2]) <= 1e-12);
  CHECK(r.eigen_entropy == doctest::Approx(0.0));
  CHECK(r.condition_number == doctest::Approx(1.0));
}

TEST_CASE("raw spectra of metrics are traceless and bounded by the Frobenius norm") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix d = solve_metric(make_random_mdp(8, 2, 0.9, seed)).final;
    const SpectralReport r = spectral_report(d);
    double sum = 0.0, sq = 0.0;
    for (double v : r.eigenvalues) sum += v;
    for (double x : d.data()) sq += x * x;
    CHECK(std::abs(sum) <= 1e-8 * r.frobenius);
    CHECK(r.frobenius * r.frobenius == doctest::Approx(sq).epsilon(1e-6));
    CHECK(r.spectral_radius <= r.frobenius);
    CHECK(r.eigen_entropy >= 0.0);
  }
}

TEST_CASE("partition information") {
  const Matrix d = solve_metric(make_chain_example(), 1e-12).final;
  const PartitionInfo singles = partition_info(d, Partition::singletons(3));
  CHECK(singles.class_size_entropy == doctest::Approx(std::log(3.0)));
  for (double x : singles.intra_class_diameters) CHECK(x == 0.0);
  CHECK(singles.compression_ratio == 1.0);

  const PartitionInfo one = partition_info(d, Partition::single_class(3));
  CHECK(one.class_size_entropy == 0.0);
  CHECK(one.intra_class_diameters[0] == doctest::Approx(1.9));
  const double mean = (1.9 + 1.0 + 0.9) / 3.0;
  CHECK(one.intra_class_variance ==
        doctest::Approx(((1.9 - mean) * (1.9 - mean) + (1.0 - mean) * (1.0 - mean) +
                         (0.9 - mean) * (0.9 - mean)) / 3.0));

  const std::vector<std::size_t> labels{0, 1, 0};
  const PartitionInfo two = partition_info(d, Partition::from_labels(labels));
  CHECK(two.class_count == 2);
  CHECK(two.intra_class_diameters[0] == doctest::Approx(0.9));
  CHECK(two.intra_class_diameters[1] == 0.0);
  const double h = -(2.0 / 3 * std::log(2.0 / 3) + 1.0 / 3 * std::log(1.0 / 3));
  CHECK(two.class_size_entropy == doctest::Approx(h));
  CHECK(two.class_size_entropy == doctest::Approx(0.6365).epsilon(1e-4));
  CHECK(two.compression_ratio == doctest::Approx(2.0 / 3.0));
}
