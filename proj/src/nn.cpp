#include "hsi/nn.hpp"

#include <algorithm>
#include <cmath>

#include "hsi/kernels.hpp"

namespace hsi::nn {

namespace {

Shape with_batch(std::size_t n, const Shape& per_sample) {
  Shape s{n};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

Shape sample_shape(const Shape& batched) { return Shape(batched.begin() + 1, batched.end()); }

void expect_batch_like(const Shape& got, const Shape& want, const char* what) {
  if (got != want) throw ShapeError(std::string(what) + ": expected " + shape_str(want) + ", got " + shape_str(got));
}

}  // namespace

// ---- Conv3D -----------------------------------------------------------------

template <typename T>
Conv3D<T>::Conv3D(std::size_t in_ch, std::size_t out_ch, std::size_t k1, std::size_t k2, std::size_t k3)
    : kernels({out_ch, k1, k2, k3, in_ch}),
      bias({out_ch}),
      grad_kernels({out_ch, k1, k2, k3, in_ch}),
      grad_bias({out_ch}) {}

template <typename T>
Shape Conv3D<T>::output_shape(const Shape& in) const {
  if (in.size() != 4 || in[0] != in_channels())
    throw ShapeError("conv3d expects [" + std::to_string(in_channels()) + ",d1,d2,d3], got " + shape_str(in));
  for (std::size_t a = 0; a < 3; ++a)
    if (in[a + 1] < kernels.extent(a + 1))
      throw ShapeError("conv3d input " + shape_str(in) + " is smaller than its kernel " +
                       shape_str(kernels.shape()));
  return {out_channels(), in[1] - kernels.extent(1) + 1, in[2] - kernels.extent(2) + 1,
          in[3] - kernels.extent(3) + 1};
}

template <typename T>
Tensor<T> Conv3D<T>::forward(const Tensor<T>& in, Mode) {
  if (in.rank() != 5) throw ShapeError("conv3d expects a rank-5 batch, got " + shape_str(in.shape()));
  const Shape out_s = output_shape(sample_shape(in.shape()));
  const kernels::Conv3dDims d{in.extent(0), in.extent(1), in.extent(2), in.extent(3), in.extent(4),
                              out_channels(), kernels.extent(1), kernels.extent(2), kernels.extent(3)};
  Tensor<T> out(with_batch(in.extent(0), out_s));
  kernels::omp::conv3d_forward(d, in.raw(), kernels.raw(), bias.raw(), out.raw());
  input_ = in;
  return out;
}

template <typename T>
Tensor<T> Conv3D<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (input_.empty()) throw ShapeError("conv3d backward called before forward");
  const Tensor<T>& in = input_;
  expect_batch_like(grad_out.shape(), with_batch(in.extent(0), output_shape(sample_shape(in.shape()))),
                    "conv3d grad_out");
  const kernels::Conv3dDims d{in.extent(0), in.extent(1), in.extent(2), in.extent(3), in.extent(4),
                              out_channels(), kernels.extent(1), kernels.extent(2), kernels.extent(3)};
  kernels::omp::conv3d_backward_weights(d, in.raw(), grad_out.raw(), grad_kernels.raw(), grad_bias.raw());
  if (!need_input_grad) return {};
  Tensor<T> grad_in(in.shape());
  kernels::omp::conv3d_backward_input(d, kernels.raw(), grad_out.raw(), grad_in.raw());
  return grad_in;
}

template <typename T>
std::vector<Param<T>> Conv3D<T>::params() {
  return {{"kernels", &kernels, &grad_kernels, this->frozen}, {"bias", &bias, &grad_bias, this->frozen}};
}

template <typename T>
std::string Conv3D<T>::describe() const {
  return std::to_string(out_channels()) + " " + std::to_string(kernels.extent(1)) + " " +
         std::to_string(kernels.extent(2)) + " " + std::to_string(kernels.extent(3)) + " " +
         std::to_string(in_channels());
}

// ---- Dense ------------------------------------------------------------------

template <typename T>
Dense<T>::Dense(std::size_t n_in, std::size_t n_out)
    : weights({n_in, n_out}), bias({n_out}), grad_weights({n_in, n_out}), grad_bias({n_out}) {}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != n_in())
    throw ShapeError("dense expects [" + std::to_string(n_in()) + "], got " + shape_str(in));
  return {n_out()};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& in, Mode) {
  if (in.rank() != 2) throw ShapeError("dense expects a rank-2 batch, got " + shape_str(in.shape()));
  output_shape(sample_shape(in.shape()));
  Tensor<T> out({in.extent(0), n_out()});
  kernels::omp::dense_forward<T>({in.extent(0), n_in(), n_out()}, in.raw(), weights.raw(), bias.raw(), out.raw());
  input_ = in;
  return out;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (input_.empty()) throw ShapeError("dense backward called before forward");
  expect_batch_like(grad_out.shape(), {input_.extent(0), n_out()}, "dense grad_out");
  const kernels::DenseDims d{input_.extent(0), n_in(), n_out()};
  kernels::omp::dense_backward_weights(d, input_.raw(), grad_out.raw(), grad_weights.raw(), grad_bias.raw());
  if (!need_input_grad) return {};
  Tensor<T> grad_in(input_.shape());
  kernels::omp::dense_backward_input(d, weights.raw(), grad_out.raw(), grad_in.raw());
  return grad_in;
}

template <typename T>
std::vector<Param<T>> Dense<T>::params() {
  return {{"weights", &weights, &grad_weights, this->frozen}, {"bias", &bias, &grad_bias, this->frozen}};
}

template <typename T>
std::string Dense<T>::describe() const {
  return std::to_string(n_in()) + " " + std::to_string(n_out());
}

// ---- ReLU -------------------------------------------------------------------

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& in, Mode) {
  Tensor<T> out = in;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  input_ = in;
  return out;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  expect_batch_like(grad_out.shape(), input_.shape(), "relu grad_out");
  if (!need_input_grad) return {};
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input_[i] > T{0})) g[i] = T{0};
  return g;
}

// ---- Flatten ----------------------------------------------------------------

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& in, Mode) {
  in_shape_ = in.shape();
  return in.reshaped({in.extent(0), in.size() / in.extent(0)});
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (grad_out.size() != shape_size(in_shape_)) throw ShapeError("flatten grad_out size mismatch");
  if (!need_input_grad) return {};
  return grad_out.reshaped(in_shape_);
}

// ---- Dropout ----------------------------------------------------------------

template <typename T>
Dropout<T>::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParamError("dropout rate must lie in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& in, Mode mode) {
  if (mode == Mode::infer || rate_ == 0.0) {
    mask_ = Tensor<T>();
    return in;
  }
  if (!hold_ || mask_.shape() != in.shape()) {
    mask_ = Tensor<T>(in.shape());
    const T keep = static_cast<T>(1.0 / (1.0 - rate_));
    for (auto& m : mask_.data()) m = rng_.uniform() < rate_ ? T{0} : keep;
  }
  Tensor<T> out = in;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask_[i];
  return out;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  if (mask_.empty()) return grad_out;
  expect_batch_like(grad_out.shape(), mask_.shape(), "dropout grad_out");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

template <typename T>
std::string Dropout<T>::describe() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", rate_);
  return buf;
}

// ---- loss -------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [batch, classes]");
  const std::size_t n = logits.extent(0), k = logits.extent(1);
  Tensor<T> p(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.raw() + i * k;
    T* out = p.raw() + i * k;
    const T zmax = *std::max_element(z, z + k);
    T sum{0};
    for (std::size_t j = 0; j < k; ++j) sum += out[j] = std::exp(z[j] - zmax);
    for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
  }
  return p;
}

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> targets) {
  if (logits.rank() != 2) throw ShapeError("softmax_xent expects [batch, classes]");
  const std::size_t n = logits.extent(0), k = logits.extent(1);
  if (targets.size() != n) throw ShapeError("softmax_xent: target count differs from batch size");
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= k)
      throw DataError("target class " + std::to_string(t) + " outside [0, " + std::to_string(k) + ")");

  LossResult<T> r{T{0}, Tensor<T>(logits.shape())};
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.raw() + i * k;
    T* g = r.grad.raw() + i * k;
    const T zmax = *std::max_element(z, z + k);
    T sum{0};
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    const T log_sum = std::log(sum);
    const auto tgt = static_cast<std::size_t>(targets[i]);
    r.loss -= z[tgt] - zmax - log_sum;
    for (std::size_t j = 0; j < k; ++j) g[j] = (std::exp(z[j] - zmax - log_sum) - (j == tgt ? T{1} : T{0})) * inv_n;
  }
  r.loss *= inv_n;
  return r;
}

// ---- Adam -------------------------------------------------------------------

template <typename T>
void adam_step(std::span<const Param<T>> params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam state tracks a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].value->shape() != state.m[i].shape() || params[i].grad->shape() != state.m[i].shape())
      throw ShapeError("Adam shape mismatch for parameter '" + params[i].name + "'");

  ++state.t;
  const auto& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.eps);
  const T ibc1 = static_cast<T>(1.0 / bc1), ibc2 = static_cast<T>(1.0 / bc2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].frozen) continue;
    T* p = params[i].value->raw();
    const T* g = params[i].grad->raw();
    T* m = state.m[i].raw();
    T* v = state.v[i].raw();
    for (std::size_t e = 0, n = params[i].value->size(); e < n; ++e) {
      m[e] = b1 * m[e] + (T{1} - b1) * g[e];
      v[e] = b2 * v[e] + (T{1} - b2) * g[e] * g[e];
      p[e] -= lr * (m[e] * ibc1) / (std::sqrt(v[e] * ibc2) + eps);
    }
  }
}

template <typename T>
Tensor<T> init_glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  for (auto& v : t.data()) v = static_cast<T>(limit * (2.0 * rng.uniform() - 1.0));
  return t;
}

#define HSI_NN_INSTANTIATE(T)                                                          \
  template class Conv3D<T>;                                                            \
  template class Dense<T>;                                                             \
  template class ReLU<T>;                                                              \
  template class Flatten<T>;                                                           \
  template class Dropout<T>;                                                           \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                     \
  template LossResult<T> softmax_xent<T>(const Tensor<T>&, std::span<const int>);      \
  template void adam_step<T>(std::span<const Param<T>>, AdamState<T>&);                \
  template Tensor<T> init_glorot<T>(Shape, std::size_t, std::size_t, std::uint64_t);

HSI_NN_INSTANTIATE(float)
HSI_NN_INSTANTIATE(double)

}  // namespace hsi::nn
