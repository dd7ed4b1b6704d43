#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsi/scene.hpp"
#include "hsi/tensor.hpp"

namespace hsi {

/// Spectral PCA reducing R bands to B components.
struct PcaModel {
  std::vector<double> mean;          // per input band
  std::vector<double> scale;         // per input band; all ones unless standardised
  Tensor<double> components;         // [R, B], orthonormal columns
  std::vector<double> eigenvalues;   // B values, non-increasing

  std::size_t in_bands() const { return mean.size(); }
  std::size_t out_bands() const { return eigenvalues.size(); }
};

struct PcaOptions {
  bool standardize = false;  // divide each band by its standard deviation before the eigensolve
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Tensor<double> vectors;      // [n, n], column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Stops once the
/// off-diagonal Frobenius norm falls below rel_tol * sum |diag|.
/// Eigenvectors are sign-normalised so their largest-magnitude entry is positive.
EigenDecomposition jacobi_eigen(const Tensor<double>& symmetric, double rel_tol = 1e-12, int max_sweeps = 100);

/// Band covariance (divisor pixels - 1) of the centred, optionally scaled spectra.
Tensor<double> band_covariance(const HyperCube& cube, std::span<const double> mean, std::span<const double> scale);

PcaModel pca_fit(const HyperCube& cube, std::size_t bands, const PcaOptions& opts = {});

/// Projected spectra at full precision, shape [width, height, B].
Tensor<double> pca_transform(const PcaModel& model, const HyperCube& cube);
HyperCube pca_apply(const PcaModel& model, const HyperCube& cube);

/// Maps a B-component vector back to R bands (exact when B == R).
std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> projected);

/// One zero-padded size×size×B patch per labeled pixel, in row-major scan order.
PatchSet extract_patches(const HyperCube& cube, const GroundTruth& gt, std::size_t size);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Per class, max(1, floor(fraction * n)) samples go to train, drawn without
/// replacement from a stream seeded by `seed`. Both lists come back sorted.
SplitIndices stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed);

}  // namespace hsi
