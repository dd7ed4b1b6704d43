#include "hsi/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hsi/kernels.hpp"
#include "hsi/rng.hpp"

namespace hsi {

EigenDecomposition jacobi_eigen(const Tensor<double>& symmetric, double rel_tol, int max_sweeps) {
  if (symmetric.rank() != 2 || symmetric.extent(0) != symmetric.extent(1))
    throw ShapeError("jacobi_eigen needs a square matrix, got " + shape_str(symmetric.shape()));
  const std::size_t n = symmetric.extent(0);
  std::vector<double> a(symmetric.data().begin(), symmetric.data().end());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double diag_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_mass += std::abs(a[i * n + i]);
  const double tol = rel_tol * diag_mass;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
  };

  EigenDecomposition out;
  int sweep = 0;
  for (; off_norm() > tol; ++sweep) {
    if (sweep == max_sweeps)
      throw NumericError("Jacobi eigensolve did not converge in " + std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  out.sweeps = sweep;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });

  out.values.resize(n);
  out.vectors = Tensor<double>({n, n});
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a[src * n + src];
    std::size_t lead = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v[r * n + src]) > std::abs(v[lead * n + src])) lead = r;
    const double sign = v[lead * n + src] < 0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors[r * n + k] = sign * v[r * n + src];
  }
  return out;
}

namespace {

// Centred (and scaled) spectra as a [pixels, bands] matrix.
std::vector<double> centred_spectra(const HyperCube& cube, std::span<const double> mean, std::span<const double> scale) {
  const std::size_t n = cube.pixels(), r = cube.bands;
  std::vector<double> x(n * r);
  const float* src = cube.values.raw();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < r; ++b) x[i * r + b] = (static_cast<double>(src[i * r + b]) - mean[b]) / scale[b];
  return x;
}

}  // namespace

Tensor<double> band_covariance(const HyperCube& cube, std::span<const double> mean, std::span<const double> scale) {
  if (cube.pixels() < 2) throw ParamError("covariance needs at least 2 pixels");
  const auto x = centred_spectra(cube, mean, scale);
  Tensor<double> cov({cube.bands, cube.bands});
  kernels::omp::scatter_matrix(cube.pixels(), cube.bands, x.data(), static_cast<double>(cube.pixels() - 1), cov.raw());
  return cov;
}

PcaModel pca_fit(const HyperCube& cube, std::size_t bands, const PcaOptions& opts) {
  const std::size_t r = cube.bands, n = cube.pixels();
  if (bands < 1 || bands > r)
    throw ParamError("PCA output bands " + std::to_string(bands) + " outside [1, " + std::to_string(r) + "]");
  if (n < 2) throw ParamError("PCA needs at least 2 pixels");

  PcaModel m;
  m.mean.assign(r, 0.0);
  m.scale.assign(r, 1.0);
  const float* src = cube.values.raw();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < r; ++b) m.mean[b] += src[i * r + b];
  for (auto& v : m.mean) v /= static_cast<double>(n);

  if (opts.standardize) {
    std::vector<double> var(r, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < r; ++b) {
        const double d = src[i * r + b] - m.mean[b];
        var[b] += d * d;
      }
    for (std::size_t b = 0; b < r; ++b) {
      const double sd = std::sqrt(var[b] / static_cast<double>(n - 1));
      m.scale[b] = sd > 0 ? sd : 1.0;
    }
  }

  const auto eig = jacobi_eigen(band_covariance(cube, m.mean, m.scale));
  m.components = Tensor<double>({r, bands});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < bands; ++k) m.components[i * bands + k] = eig.vectors[i * r + k];
  m.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(bands));
  return m;
}

Tensor<double> pca_transform(const PcaModel& model, const HyperCube& cube) {
  if (cube.bands != model.in_bands())
    throw ShapeError("cube has " + std::to_string(cube.bands) + " bands, PCA model expects " +
                     std::to_string(model.in_bands()));
  const std::size_t r = model.in_bands(), b = model.out_bands(), n = cube.pixels();
  Tensor<double> out({cube.width, cube.height, b});
  const float* src = cube.values.raw();
  const double* comp = model.components.raw();
  std::vector<double> y(r);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < r; ++k) y[k] = (static_cast<double>(src[i * r + k]) - model.mean[k]) / model.scale[k];
    double* dst = out.raw() + i * b;
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t c = 0; c < b; ++c) dst[c] += comp[k * b + c] * y[k];
  }
  return out;
}

HyperCube pca_apply(const PcaModel& model, const HyperCube& cube) {
  return HyperCube(pca_transform(model, cube).cast<float>());
}

std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> projected) {
  const std::size_t r = model.in_bands(), b = model.out_bands();
  if (projected.size() != b) throw ShapeError("projected vector length mismatch");
  std::vector<double> y(r);
  for (std::size_t k = 0; k < r; ++k) {
    double acc = 0.0;
    for (std::size_t c = 0; c < b; ++c) acc += model.components[k * b + c] * projected[c];
    y[k] = acc * model.scale[k] + model.mean[k];
  }
  return y;
}

PatchSet extract_patches(const HyperCube& cube, const GroundTruth& gt, std::size_t size) {
  if (size < 1 || size % 2 == 0) throw ParamError("patch size must be odd and >= 1, got " + std::to_string(size));
  if (gt.width != cube.width || gt.height != cube.height)
    throw ShapeError("ground truth " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                     " does not match cube " + std::to_string(cube.width) + "x" + std::to_string(cube.height));

  PatchSet ps;
  ps.size = size;
  ps.bands = cube.bands;
  std::vector<std::uint32_t> centres;
  std::vector<std::uint16_t> ids;
  for (std::size_t a = 0; a < cube.width; ++a)
    for (std::size_t b = 0; b < cube.height; ++b)
      if (const auto id = gt.at(a, b); id != 0) {
        centres.push_back(static_cast<std::uint32_t>(a));
        centres.push_back(static_cast<std::uint32_t>(b));
        ids.push_back(id);
      }
  if (ids.empty()) throw DataError("ground truth has no labeled pixels");

  const std::size_t n = ids.size();
  ps.class_values = ids;
  std::sort(ps.class_values.begin(), ps.class_values.end());
  ps.class_values.erase(std::unique(ps.class_values.begin(), ps.class_values.end()), ps.class_values.end());
  ps.labels.resize(n);
  ps.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ps.labels[i] = static_cast<int>(std::lower_bound(ps.class_values.begin(), ps.class_values.end(), ids[i]) -
                                    ps.class_values.begin());
    ps.coords[i] = {centres[2 * i], centres[2 * i + 1]};
  }

  ps.patches = Tensor<float>({n, size, size, cube.bands});
  kernels::omp::gather_patches({cube.width, cube.height, cube.bands, size, n}, cube.values.raw(), centres.data(),
                               ps.patches.raw());
  return ps;
}

SplitIndices stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ParamError("train fraction must lie in (0, 1), got " + std::to_string(train_fraction));
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitIndices split;
  split.seed = seed;
  Rng rng = Rng::derive(seed, "split");
  for (auto& [cls, idx] : by_class) {
    if (idx.size() < 2)
      throw DataError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                      " sample(s); stratified splitting needs at least 2");
    rng.shuffle(idx);
    const auto want = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(idx.size()) + 1e-9));
    const std::size_t k = std::max<std::size_t>(1, std::min(want, idx.size() - 1));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace hsi
