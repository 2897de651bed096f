#include "bisim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bisim/errors.hpp"

namespace bisim {

SummaryStats summary_stats(const Matrix& d) {
  if (!d.square()) throw StructuralError("summary_stats needs a square matrix");
  const std::size_t n = d.rows();
  if (n < 2) throw PreconditionError("summary_stats needs at least two states");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += d(i, j);
      ++count;
    }
  SummaryStats s;
  s.mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sq += (d(i, j) - s.mean) * (d(i, j) - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(count));
  return s;
}

namespace {

double off_diagonal_mass(const Matrix& a) {
  double off = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) off += a(i, j) * a(i, j);
  return std::sqrt(off);
}

}  // namespace

EigenDecomposition symmetric_eigs(const Matrix& input) {
  if (!input.square()) throw StructuralError("eigendecomposition needs a square matrix");
  const std::size_t n = input.rows();
  const double scale = std::max(1.0, input.max_abs());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-12 * scale)
        throw StructuralError("eigendecomposition needs a symmetric matrix");

  Matrix a = input;
  Matrix v = Matrix::identity(n);
  EigenDecomposition out;
  constexpr std::size_t kMaxSweeps = 100;
  constexpr double kOffTarget = 1e-10;

  out.off_diagonal = off_diagonal_mass(a);
  while (out.off_diagonal > kOffTarget && out.sweeps < kMaxSweeps) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    ++out.sweeps;
    out.off_diagonal = off_diagonal_mass(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double ax = std::abs(a(x, x)), ay = std::abs(a(y, y));
    return ax != ay ? ax > ay : a(x, x) > a(y, y);
  });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

const char* to_string(SpectralMode mode) {
  return mode == SpectralMode::Raw ? "raw" : "double_centered";
}

double entropy_nats(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double w : weights)
    if (w > 0.0) {
      const double p = w / total;
      h -= p * std::log(p);
    }
  return h;
}

SpectralReport spectral_report(const Matrix& d, SpectralMode mode) {
  if (!d.square()) throw StructuralError("spectral report needs a square matrix");
  const std::size_t n = d.rows();
  Matrix a = d;
  if (mode == SpectralMode::DoubleCentered) {
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sq(i, j) = d(i, j) * d(i, j);
    std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        row_mean[i] += sq(i, j) / n;
        col_mean[j] += sq(i, j) / n;
        grand += sq(i, j) / (static_cast<double>(n) * n);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        a(i, j) = -0.5 * (sq(i, j) - row_mean[i] - col_mean[j] + grand);
    // Remove round-off asymmetry.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  }

  SpectralReport r;
  r.mode = mode;
  double fro = 0.0;
  for (double x : a.data()) fro += x * x;
  r.frobenius = std::sqrt(fro);

  const auto eig = symmetric_eigs(a);
  r.eigenvalues = eig.values;
  std::vector<double> mags;
  for (double l : eig.values) mags.push_back(std::abs(l));
  r.spectral_radius = mags.empty() ? 0.0 : *std::max_element(mags.begin(), mags.end());

  if (r.spectral_radius > 0.0) {
    const double threshold = 1e-10 * r.spectral_radius;
    double smallest = std::numeric_limits<double>::infinity();
    for (double m : mags)
      if (m > threshold) smallest = std::min(smallest, m);
    r.condition_number = r.spectral_radius / smallest;
    r.condition_defined = true;
    r.eigen_entropy = entropy_nats(mags);
    r.entropy_defined = true;
  } else {
    r.condition_number = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

PartitionInfo partition_info(const Matrix& d, const Partition& p) {
  PartitionInfo info;
  info.class_count = p.class_count;
  info.compression_ratio =
      static_cast<double>(p.class_count) / static_cast<double>(std::max<std::size_t>(1, p.size()));
  info.intra_class_diameters = intra_class_diameters(d, p);

  const auto members = p.members();
  double variance_sum = 0.0;
  std::vector<double> sizes;
  for (const auto& cls : members) {
    sizes.push_back(static_cast<double>(cls.size()));
    std::vector<double> dists;
    for (std::size_t x = 0; x < cls.size(); ++x)
      for (std::size_t y = x + 1; y < cls.size(); ++y) dists.push_back(d(cls[x], cls[y]));
    if (dists.empty()) continue;
    const double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / dists.size();
    double var = 0.0;
    for (double x : dists) var += (x - mean) * (x - mean);
    variance_sum += var / dists.size();
  }
  info.intra_class_variance = members.empty() ? 0.0 : variance_sum / members.size();
  info.class_size_entropy = entropy_nats(sizes);
  return info;
}

}  // namespace bisim
