#pragma once

#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/quotient.hpp"

namespace bisim {

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
};

/// Mean and std of the n(n-1)/2 strictly upper-triangular entries.
SummaryStats summary_stats(const Matrix& d);

struct EigenDecomposition {
  std::vector<double> values;  ///< sorted by descending |value|
  Matrix vectors;              ///< column k pairs with values[k]
  std::size_t sweeps = 0;
  double off_diagonal = 0.0;   ///< Frobenius mass left off the diagonal
};

/// Cyclic Jacobi rotations. Throws StructuralError on asymmetric input
/// (tolerance 1e-12 relative to the largest entry).
EigenDecomposition symmetric_eigs(const Matrix& a);

enum class SpectralMode { Raw, DoubleCentered };

struct SpectralReport {
  SpectralMode mode = SpectralMode::Raw;
  double frobenius = 0.0;
  double spectral_radius = 0.0;
  /// max |lambda| / min nonzero |lambda|; undefined for the zero matrix.
  double condition_number = 0.0;
  bool condition_defined = false;
  /// Shannon entropy (nats) of |lambda_i| / sum |lambda_j|; undefined for zero spectra.
  double eigen_entropy = 0.0;
  bool entropy_defined = false;
  std::vector<double> eigenvalues;
};

/// Raw analyses d itself; DoubleCentered analyses -1/2 J (d o d) J with J = I - 11^T/n.
SpectralReport spectral_report(const Matrix& d, SpectralMode mode = SpectralMode::Raw);

const char* to_string(SpectralMode mode);

struct PartitionInfo {
  std::size_t class_count = 0;
  double compression_ratio = 0.0;
  std::vector<double> intra_class_diameters;
  /// Mean over classes of the variance of within-class pairwise distances.
  double intra_class_variance = 0.0;
  double class_size_entropy = 0.0;  ///< nats
};

PartitionInfo partition_info(const Matrix& d, const Partition& p);

/// Shannon entropy (nats) of a nonnegative weight vector after normalisation.
double entropy_nats(const std::vector<double>& weights);

}  // namespace bisim
