#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "hsi/error.hpp"

namespace hsi {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

/// Dense row-major N-d array. The last axis is contiguous.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>);

 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_))
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_str(shape_));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size()) throw ShapeError("index rank mismatch");
    std::size_t off = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] >= shape_[a]) throw ShapeError("index out of range on axis " + std::to_string(a));
      off = off * shape_[a] + idx[a];
    }
    return off;
  }

  template <typename... I>
  T& at(I... idx) {
    const std::size_t i[] = {static_cast<std::size_t>(idx)...};
    return data_[offset(i)];
  }
  template <typename... I>
  const T& at(I... idx) const {
    const std::size_t i[] = {static_cast<std::size_t>(idx)...};
    return data_[offset(i)];
  }

  /// Same data, new shape. Element count must be unchanged.
  Tensor reshaped(Shape s) const {
    if (shape_size(s) != data_.size())
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
    return Tensor(std::move(s), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static void check_shape(const Shape& s) {
    if (s.empty()) throw ShapeError("tensor needs rank >= 1");
    for (auto e : s)
      if (e == 0) throw ShapeError("zero extent in shape " + shape_str(s));
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> tensor_create(Shape shape, T fill) {
  return Tensor<T>(std::move(shape), fill);
}

/// c = a·b for rank-2 operands, accumulating in T in ascending k order.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul needs rank-2 operands");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k)
    throw ShapeError("matmul inner extents differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  Tensor<T> c({m, n});
  const T* pa = a.raw();
  const T* pb = b.raw();
  T* pc = c.raw();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      const T av = pa[i * k + t];
      for (std::size_t j = 0; j < n; ++j) pc[i * n + j] += av * pb[t * n + j];
    }
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose needs rank 2");
  const std::size_t m = a.extent(0), n = a.extent(1);
  Tensor<T> t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = a[i * n + j];
  return t;
}

enum class Reduce { sum, mean, max };

/// Reduces one axis. Elements along the axis are combined in ascending index order.
template <typename T>
Tensor<T> reduce(const Tensor<T>& t, std::size_t axis, Reduce kind) {
  if (axis >= t.rank())
    throw ShapeError("reduce axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(t.rank()));
  const auto& s = t.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= s[a];
  for (std::size_t a = axis + 1; a < s.size(); ++a) inner *= s[a];
  const std::size_t n = s[axis];

  Shape os;
  for (std::size_t a = 0; a < s.size(); ++a)
    if (a != axis) os.push_back(s[a]);
  if (os.empty()) os.push_back(1);

  Tensor<T> out(os);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      T acc = t[o * n * inner + i];
      for (std::size_t r = 1; r < n; ++r) {
        const T v = t[(o * n + r) * inner + i];
        acc = kind == Reduce::max ? (v > acc ? v : acc) : acc + v;
      }
      if (kind == Reduce::mean) acc /= static_cast<T>(n);
      out[o * inner + i] = acc;
    }
  return out;
}

template <typename T>
T sum_all(const Tensor<T>& t) {
  T acc{0};
  for (T v : t.data()) acc += v;
  return acc;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff shape mismatch");
  T m{0};
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace hsi
