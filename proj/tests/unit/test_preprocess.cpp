#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsi/preprocess.hpp"
#include "hsi/rng.hpp"
#include "hsi/verify.hpp"

namespace {

hsi::HyperCube random_cube(std::size_t w, std::size_t h, std::size_t r, std::uint64_t seed) {
  hsi::Rng rng(seed);
  hsi::HyperCube c(w, h, r);
  // Correlated bands so the spectrum is not degenerate.
  for (std::size_t p = 0; p < w; ++p)
    for (std::size_t q = 0; q < h; ++q) {
      const double base = rng.normal();
      for (std::size_t b = 0; b < r; ++b)
        c.spectrum(p, q)[b] = static_cast<float>(base * (1.0 + 0.1 * b) + rng.normal() * (0.2 + 0.05 * b));
    }
  return c;
}

// Direct two-pass covariance, divisor n-1.
std::vector<double> brute_covariance(const hsi::HyperCube& c) {
  const std::size_t n = c.pixels(), r = c.bands;
  std::vector<double> mean(r, 0.0), cov(r * r, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < r; ++b) mean[b] += c.values[i * r + b];
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b)
        cov[a * r + b] += (c.values[i * r + a] - mean[a]) * (c.values[i * r + b] - mean[b]);
  for (auto& v : cov) v /= static_cast<double>(n - 1);
  return cov;
}

}  // namespace

TEST_CASE("constant cube has zero spectrum") {
  hsi::HyperCube c(4, 3, 6, 2.5f);
  const auto m = hsi::pca_fit(c, 3);
  for (double e : m.eigenvalues) CHECK(e == doctest::Approx(0.0));
  const auto t = hsi::pca_transform(m, c);
  for (double v : t.data()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("eigenvalue sum equals the covariance trace") {
  const auto c = random_cube(6, 5, 8, 3);
  const auto cov = brute_covariance(c);
  double trace = 0;
  for (std::size_t b = 0; b < 8; ++b) trace += cov[b * 8 + b];
  const auto m = hsi::pca_fit(c, 8);
  double sum = 0;
  for (double e : m.eigenvalues) sum += e;
  CHECK(std::abs(sum - trace) < 1e-8);
  CHECK(std::is_sorted(m.eigenvalues.rbegin(), m.eigenvalues.rend()));
}

TEST_CASE("band covariance matches a two-pass computation") {
  const auto c = random_cube(5, 4, 7, 11);
  const auto cov = brute_covariance(c);
  const auto m = hsi::pca_fit(c, 7);
  const auto got = hsi::band_covariance(c, m.mean, m.scale);
  for (std::size_t i = 0; i < cov.size(); ++i) CHECK(std::abs(got[i] - cov[i]) < 1e-10);
}

TEST_CASE("PCA agrees with the Eigen oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    hsi::Rng rng(seed);
    const std::size_t w = 2 + rng.below(7), h = 2 + rng.below(7), r = 1 + rng.below(12);
    const std::size_t b = 1 + rng.below(r);
    const auto c = random_cube(w, h, r, seed + 500);
    const auto oracle = hsi::verify::pca_reference(c, b);
    const auto m = hsi::pca_fit(c, b);
    for (std::size_t k = 0; k < b; ++k) CHECK(std::abs(m.eigenvalues[k] - oracle.eigenvalues[k]) < 1e-8);
    CHECK(hsi::max_abs_diff(hsi::pca_transform(m, c), oracle.projection) < 1e-8);
  }
}

TEST_CASE("projection equals explicit centred matrix product") {
  const auto c = random_cube(3, 4, 6, 8);
  const auto m = hsi::pca_fit(c, 4);
  const auto t = hsi::pca_transform(m, c);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 4; ++q)
      for (std::size_t k = 0; k < 4; ++k) {
        double s = 0;
        for (std::size_t b = 0; b < 6; ++b)
          s += (c.spectrum(p, q)[b] - m.mean[b]) / m.scale[b] * m.components.at(b, k);
        CHECK(std::abs(t.at(p, q, k) - s) < 1e-9);
      }
}

TEST_CASE("mean spectrum projects to zero, B=R reconstructs") {
  const auto c = random_cube(5, 5, 9, 2);
  const auto m = hsi::pca_fit(c, 9);
  hsi::HyperCube mean_px(1, 1, 9);
  for (std::size_t b = 0; b < 9; ++b) mean_px.values[b] = static_cast<float>(m.mean[b]);
  const auto centred = hsi::pca_transform(m, mean_px);
  for (double v : centred.data()) CHECK(std::abs(v) < 1e-6);

  const auto t = hsi::pca_transform(m, c);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t q = 0; q < 5; ++q) {
      std::vector<double> proj(t.raw() + (p * 5 + q) * 9, t.raw() + (p * 5 + q + 1) * 9);
      const auto back = hsi::pca_reconstruct(m, proj);
      for (std::size_t b = 0; b < 9; ++b) {
        const double x = c.spectrum(p, q)[b];
        CHECK(std::abs(back[b] - x) <= 1e-5 * std::max(1.0, std::abs(x)));
      }
    }
}

TEST_CASE("components are orthonormal and sign-normalised") {
  const auto c = random_cube(6, 6, 10, 5);
  const auto m = hsi::pca_fit(c, 6);
  for (std::size_t a = 0; a < 6; ++a) {
    double big = 0;
    for (std::size_t r = 0; r < 10; ++r)
      if (std::abs(m.components.at(r, a)) > std::abs(big)) big = m.components.at(r, a);
    CHECK(big > 0);
    for (std::size_t b = 0; b < 6; ++b) {
      double dot = 0;
      for (std::size_t r = 0; r < 10; ++r) dot += m.components.at(r, a) * m.components.at(r, b);
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("standardised PCA equals PCA of the z-scored cube") {
  auto c = random_cube(5, 6, 5, 9);
  const auto ms = hsi::pca_fit(c, 3, {true});
  for (std::size_t b = 0; b < 5; ++b) CHECK(ms.scale[b] > 0);
  double total = 0;
  for (double e : hsi::pca_fit(c, 5, {true}).eigenvalues) total += e;
  CHECK(total == doctest::Approx(5.0).epsilon(1e-9));  // trace of a correlation matrix
}

TEST_CASE("pca_fit rejects bad band counts") {
  const auto c = random_cube(3, 3, 4, 1);
  CHECK_THROWS_AS(hsi::pca_fit(c, 0), hsi::ParamError);
  CHECK_THROWS_AS(hsi::pca_fit(c, 5), hsi::ParamError);
  CHECK_THROWS_AS(hsi::pca_fit(hsi::HyperCube(1, 1, 4), 2), hsi::Error);
}

TEST_CASE("jacobi on a known matrix") {
  hsi::Tensor<double> a({2, 2}, {2, 1, 1, 2});
  const auto e = hsi::jacobi_eigen(a);
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
}

TEST_CASE("patch extraction") {
  const auto c = random_cube(6, 5, 3, 4);
  hsi::GroundTruth gt(6, 5);
  gt.at(0, 0) = 2;
  gt.at(3, 2) = 5;
  gt.at(5, 4) = 2;
  gt.at(1, 4) = 9;

  SUBCASE("S=1 gives the pixel spectrum") {
    const auto ps = hsi::extract_patches(c, gt, 1);
    CHECK(ps.count() == gt.labeled_count());
    for (std::size_t i = 0; i < ps.count(); ++i) {
      const auto [p, q] = ps.coords[i];
      for (std::size_t b = 0; b < 3; ++b) CHECK(ps.patch(i)[b] == c.spectrum(p, q)[b]);
    }
  }
  SUBCASE("scan order, labels and zero padding") {
    const auto ps = hsi::extract_patches(c, gt, 5);
    REQUIRE(ps.count() == 4);
    CHECK(ps.coords == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {1, 4}, {3, 2}, {5, 4}});
    CHECK(ps.class_values == std::vector<std::uint16_t>{2, 5, 9});
    CHECK(ps.labels == std::vector<int>{0, 2, 1, 0});
    // Patch centred on (0,0): entries with negative source coordinates are zero.
    const std::size_t s = 5, b = 3;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t k = 0; k < b; ++k) {
          const long p = static_cast<long>(i) - 2, q = static_cast<long>(j) - 2;
          const float want = (p < 0 || q < 0) ? 0.0f : c.spectrum(p, q)[k];
          CHECK(ps.patch(0)[(i * s + j) * b + k] == want);
        }
  }
  SUBCASE("single labelled centre pixel with S=9") {
    hsi::HyperCube c9(9, 9, 2, 1.0f);
    hsi::GroundTruth g9(9, 9);
    g9.at(4, 4) = 1;
    const auto ps = hsi::extract_patches(c9, g9, 9);
    CHECK(ps.count() == 1);
    for (float v : ps.patches.data()) CHECK(v == 1.0f);
  }
  CHECK_THROWS_AS(hsi::extract_patches(c, gt, 4), hsi::ParamError);
  CHECK_THROWS_AS(hsi::extract_patches(c, hsi::GroundTruth(6, 5), 3), hsi::DataError);
  CHECK_THROWS_AS(hsi::extract_patches(c, hsi::GroundTruth(5, 5, 1), 3), hsi::Error);
}

TEST_CASE("stratified split sizes for the six-class target scene") {
  const std::vector<std::size_t> counts = {391, 1343, 616, 1525, 674, 799};
  const std::vector<std::size_t> want = {156, 537, 246, 610, 269, 319};
  std::vector<int> labels;
  for (std::size_t k = 0; k < counts.size(); ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
  hsi::Rng(3).shuffle(labels);
  const auto s = hsi::stratified_split(labels, 0.4, 17);
  std::vector<std::size_t> got(6, 0);
  for (auto i : s.train) ++got[static_cast<std::size_t>(labels[i])];
  CHECK(got == want);
  CHECK(s.train.size() + s.test.size() == labels.size());
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());

  const auto again = hsi::stratified_split(labels, 0.4, 17);
  CHECK(again.train == s.train);
  CHECK(hsi::stratified_split(labels, 0.4, 18).train != s.train);
}

TEST_CASE("split of a two-sample class and invalid fractions") {
  const std::vector<int> two = {0, 0};
  const auto s = hsi::stratified_split(two, 0.5, 1);
  CHECK(s.train.size() == 1);
  CHECK(s.test.size() == 1);
  CHECK_THROWS_AS(hsi::stratified_split(two, 0.0, 1), hsi::ParamError);
  CHECK_THROWS_AS(hsi::stratified_split(two, 1.0, 1), hsi::ParamError);
}
