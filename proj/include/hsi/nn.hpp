#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hsi/rng.hpp"
#include "hsi/tensor.hpp"

namespace hsi::nn {

enum class Mode { train, infer };

/// A trainable tensor together with its gradient slot.
template <typename T>
struct Param {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
  bool frozen;
};

/// A network layer over batches: inputs and outputs carry a leading batch axis.
/// forward caches what backward needs; backward overwrites the parameter grads.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  /// Per-sample output shape for a per-sample input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& in, Mode mode) = 0;
  /// Returns the input gradient, or an empty tensor when need_input_grad is false.
  virtual Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) = 0;
  virtual std::vector<Param<T>> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// Shape parameters for the layer manifest, e.g. "8 3 3 3 1".
  virtual std::string describe() const = 0;
  virtual bool stochastic() const { return false; }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto& p : params()) n += p.value->size();
    return n;
  }

  std::string name;
  bool frozen = false;
};

/// Valid, stride-1 3-D cross-correlation.
/// Per-sample input [in_ch, d1, d2, d3]; kernels [out_ch, k1, k2, k3, in_ch].
template <typename T>
class Conv3D final : public Layer<T> {
 public:
  Conv3D(std::size_t in_ch, std::size_t out_ch, std::size_t k1, std::size_t k2, std::size_t k3);

  std::string kind() const override { return "conv3d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& in, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  std::vector<Param<T>> params() override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv3D>(*this); }
  std::string describe() const override;

  std::size_t in_channels() const { return kernels.extent(4); }
  std::size_t out_channels() const { return kernels.extent(0); }
  std::size_t fan_in() const { return in_channels() * kernels.extent(1) * kernels.extent(2) * kernels.extent(3); }
  std::size_t fan_out() const { return out_channels() * kernels.extent(1) * kernels.extent(2) * kernels.extent(3); }

  Tensor<T> kernels, bias;
  Tensor<T> grad_kernels, grad_bias;

 private:
  Tensor<T> input_;
};

/// Affine map y = x·W + b. Per-sample input [n_in]; weights [n_in, n_out].
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t n_in, std::size_t n_out);

  std::string kind() const override { return "dense"; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& in, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  std::vector<Param<T>> params() override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }
  std::string describe() const override;

  std::size_t n_in() const { return weights.extent(0); }
  std::size_t n_out() const { return weights.extent(1); }

  Tensor<T> weights, bias;
  Tensor<T> grad_weights, grad_bias;

 private:
  Tensor<T> input_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& in, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }
  std::string describe() const override { return ""; }

 private:
  Tensor<T> input_;
};

/// Collapses every per-sample axis into one, keeping channel-major order.
template <typename T>
class Flatten final : public Layer<T> {
 public:
  std::string kind() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
  Tensor<T> forward(const Tensor<T>& in, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }
  std::string describe() const override { return ""; }

 private:
  Shape in_shape_;
};

/// Inverted dropout: in train mode each activation is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate). Inference mode is the identity.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed);

  std::string kind() const override { return "dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& in, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }
  std::string describe() const override;
  bool stochastic() const override { return rate_ > 0.0; }

  double rate() const { return rate_; }
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  /// Reuse the last mask instead of drawing a new one (finite-difference checks).
  void hold_mask(bool hold) { hold_ = hold; }

 private:
  double rate_;
  Rng rng_;
  bool hold_ = false;
  Tensor<T> mask_;  // 0 or 1/(1-rate); empty after an inference pass
};

template <typename T>
struct LossResult {
  T loss;
  Tensor<T> grad;  // d loss / d logits, already divided by the batch size
};

/// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Mean cross-entropy of softmax(logits) against integer targets.
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> targets);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam moments, one pair per parameter in the order the parameters are passed.
template <typename T>
struct AdamState {
  AdamConfig cfg;
  std::vector<Tensor<T>> m, v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update. Frozen parameters are left untouched but the
/// step counter still advances.
template <typename T>
void adam_step(std::span<const Param<T>> params, AdamState<T>& state);

/// Uniform Glorot initialisation on ±sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> init_glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

}  // namespace hsi::nn
