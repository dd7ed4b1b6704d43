#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsi/rng.hpp"
#include "hsi/tensor.hpp"

using hsi::Reduce;
using hsi::Tensor;

namespace {

Tensor<double> random_tensor(hsi::Shape s, std::uint64_t seed) {
  hsi::Rng rng(seed);
  Tensor<double> t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(-1, 1);
  return t;
}

}  // namespace

TEST_CASE("tensor_create fills") {
  auto z = hsi::tensor_create<double>({2, 3}, 0.0);
  CHECK(z.shape() == hsi::Shape{2, 3});
  CHECK(z.size() == 6);
  for (double v : z.data()) CHECK(v == 0.0);

  auto one = hsi::tensor_create<float>({1}, 7.5f);
  CHECK(one.size() == 1);
  CHECK(one[0] == 7.5f);

  auto ones = hsi::tensor_create<double>({2, 2, 2, 2, 2}, 1.0);
  CHECK(ones.size() == 32);
  CHECK(hsi::sum_all(ones) == 32.0);
}

TEST_CASE("tensor rejects bad shapes") {
  CHECK_THROWS_AS(Tensor<float>(hsi::Shape{}), hsi::ShapeError);
  CHECK_THROWS_AS(Tensor<float>(hsi::Shape{2, 0}), hsi::ShapeError);
  CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>(3)), hsi::ShapeError);
  Tensor<float> t({2, 3});
  CHECK_THROWS_AS(t.at(2, 0), hsi::ShapeError);
  CHECK_THROWS_AS(t.reshaped({4}), hsi::ShapeError);
  CHECK(t.reshaped({3, 2}).shape() == hsi::Shape{3, 2});
}

TEST_CASE("row-major indexing") {
  Tensor<double> t({2, 3, 4});
  t.at(1, 2, 3) = 5;
  CHECK(t[1 * 12 + 2 * 4 + 3] == 5);
}

TEST_CASE("matmul examples") {
  Tensor<double> eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1;
  auto b = random_tensor({3, 2}, 4);
  CHECK(hsi::matmul(eye, b) == b);

  Tensor<double> a({2, 2}, {1, 2, 3, 4});
  Tensor<double> c({2, 1}, {5, 6});
  CHECK(hsi::matmul(a, c) == Tensor<double>({2, 1}, {17, 39}));

  CHECK_THROWS_AS(hsi::matmul(a, Tensor<double>({3, 1})), hsi::ShapeError);
}

TEST_CASE("matmul agrees with a triple loop") {
  auto a = random_tensor({7, 5}, 1);
  auto b = random_tensor({5, 4}, 2);
  Tensor<double> ref({7, 4});
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
      ref.at(i, j) = s;
    }
  CHECK(hsi::max_abs_diff(hsi::matmul(a, b), ref) < 1e-12);
}

TEST_CASE("matmul is associative within rounding") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = random_tensor({4, 6}, seed);
    auto b = random_tensor({6, 3}, seed + 100);
    auto c = random_tensor({3, 5}, seed + 200);
    CHECK(hsi::max_abs_diff(hsi::matmul(hsi::matmul(a, b), c), hsi::matmul(a, hsi::matmul(b, c))) < 1e-12);
  }
}

TEST_CASE("transpose") {
  Tensor<double> a({2, 3}, {1, 2, 3, 4, 5, 6});
  auto t = hsi::transpose(a);
  CHECK(t.shape() == hsi::Shape{3, 2});
  CHECK(t.at(2, 1) == 6);
  CHECK(hsi::transpose(t) == a);
}

TEST_CASE("reduce examples") {
  Tensor<double> a({2, 2}, {1, 2, 3, 4});
  CHECK(hsi::reduce(a, 0, Reduce::sum) == Tensor<double>({2}, {4, 6}));
  CHECK(hsi::reduce(hsi::tensor_create<double>({3, 4}, 2.5), 1, Reduce::mean) ==
        hsi::tensor_create<double>({3}, 2.5));
  Tensor<double> m({2, 2}, {1, 9, 7, 3});
  CHECK(hsi::reduce(m, 1, Reduce::max) == Tensor<double>({2}, {9, 7}));
  CHECK(hsi::reduce(Tensor<double>({3}, {1, 2, 3}), 0, Reduce::sum) == Tensor<double>({1}, {6}));
  CHECK_THROWS_AS(hsi::reduce(a, 2, Reduce::sum), hsi::ShapeError);
}

TEST_CASE("reductions are repeatable to the bit") {
  auto t = random_tensor({50, 33}, 9);
  CHECK(hsi::reduce(t, 0, Reduce::sum) == hsi::reduce(t, 0, Reduce::sum));
  CHECK(hsi::sum_all(t) == hsi::sum_all(t));
}

TEST_CASE("rng streams are reproducible and distinct") {
  hsi::Rng a(5), b(5), c = hsi::Rng::derive(5, "x");
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(hsi::Rng(5).next() != c.next());
  hsi::Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
  }
}
