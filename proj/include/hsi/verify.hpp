#pragma once

// Independent oracles and self-checks behind `hsitl verify` and the test
// suites. Nothing here shares code paths with the kernels it checks: the
// convolution oracle is a plain nested loop, the PCA oracle uses Eigen's
// symmetric solver, gradients are checked with central differences.

#include <cstdint>
#include <string>
#include <vector>

#include "hsi/preprocess.hpp"
#include "hsi/tensor.hpp"

namespace hsi::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0;      // measured quantity (error, count, ...)
  double threshold = 0;  // pass bound for value
  std::string detail;
};

constexpr double kFdStep = 1e-5;
constexpr double kGradTolerance = 1e-5;

/// |a - n| / max(|a|, |n|, floor). Entries where both sides are below `floor`
/// are compared absolutely against floor * tolerance.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// out[n,o,x,y,z] = b[o] + sum_{c,i,j,l} w[o,i,j,l,c] in[n,c,x+i,y+j,z+l], by direct summation.
Tensor<double> conv3d_reference(const Tensor<double>& in, const Tensor<double>& kernels, const Tensor<double>& bias);

/// Central-difference gradient check of one layer kind over `instances` random
/// cases. Kinds: conv3d, dense, relu, flatten, dropout, softmax_xent.
/// `perturb` corrupts the analytic gradient (mutation sanity check).
CheckResult gradient_check(const std::string& kind, int instances, std::uint64_t seed, double perturb = 0.0);
std::vector<CheckResult> gradient_suite(int instances, std::uint64_t seed);

struct PcaOracle {
  std::vector<double> eigenvalues;  // descending, all R
  Tensor<double> vectors;           // [R, R], sign-normalised columns
  Tensor<double> projection;        // [P, Q, B]
};

PcaOracle pca_reference(const HyperCube& cube, std::size_t bands);

/// Compares pca_fit/pca_transform against the oracle on random cubes no larger
/// than 8×8×12. value = max absolute deviation of eigenvalues and projections.
CheckResult pca_oracle_suite(int cubes, std::uint64_t seed, double tolerance = 1e-8);

/// Base model (7, 15, 16) parameter count, with the per-layer breakdown in detail.
CheckResult param_count_check();

/// Random cube, ground truth, patch archive and checkpoint round-trips.
CheckResult format_roundtrip_check(std::uint64_t seed, int instances = 5);

/// Two identical single-threaded training runs must match bit for bit.
CheckResult determinism_check(std::uint64_t seed);

}  // namespace hsi::verify
