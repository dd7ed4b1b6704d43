#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hsi/io.hpp"
#include "hsi/nn.hpp"
#include "hsi/preprocess.hpp"
#include "hsi/scene.hpp"

namespace hsi {

/// An ordered stack of layers ending in a dense layer whose outputs are
/// classified by softmax. Input samples have shape [1, S, S, B].
template <typename T>
class Model {
 public:
  Model() = default;
  Model(std::size_t patch_size, std::size_t bands) : input_shape{1, patch_size, patch_size, bands} {}
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  /// Appends a layer, naming it and checking that shapes compose.
  nn::Layer<T>& add(std::unique_ptr<nn::Layer<T>> layer, std::string name);

  std::size_t patch_size() const { return input_shape.at(1); }
  std::size_t bands() const { return input_shape.at(3); }
  /// Per-sample output shape after layer `upto` (exclusive); defaults to the whole stack.
  Shape shape_after(std::size_t upto) const;
  std::size_t num_classes() const;

  /// Runs layers [from, to) on a batch.
  Tensor<T> forward(const Tensor<T>& batch, nn::Mode mode, std::size_t from = 0, std::size_t to = SIZE_MAX);
  /// Backpropagates d loss / d logits down to the first layer holding trainable parameters.
  void backward(const Tensor<T>& grad_logits, std::size_t from = 0);

  std::vector<nn::Param<T>> params();
  std::size_t param_count() const;
  std::size_t trainable_param_count() const;
  /// Number of parameters in each parameterised layer, in order.
  std::vector<std::size_t> layer_param_counts() const;
  /// Index of the first layer with trainable parameters, or layers.size().
  std::size_t first_trainable() const;
  /// Length of the leading run of frozen, deterministic layers.
  std::size_t frozen_prefix() const;

  Checkpoint to_checkpoint() const;
  /// Copies matching tensors by name; every model parameter must be present.
  void load_parameters(const Checkpoint& ckpt);

  /// One line per layer: name, kind, frozen flag, shape parameters.
  std::string manifest() const;
  static Model from_manifest(const std::string& text);

  Shape input_shape;                         // [1, S, S, B]
  std::vector<std::uint16_t> class_values;   // ground-truth id per output unit, may be empty
  std::vector<std::unique_ptr<nn::Layer<T>>> layers;
};

/// Three 3×3×3 valid convolutions (8, 16, 32 kernels) with ReLU, flatten,
/// dense 256 → 128 → classes.
template <typename T>
Model<T> build_base_model(std::size_t patch_size, std::size_t bands, std::size_t classes, std::uint64_t seed);

/// One 3×3×3 convolution (8 kernels) with ReLU, flatten, dense → classes.
template <typename T>
Model<T> build_simple_model(std::size_t patch_size, std::size_t bands, std::size_t classes, std::uint64_t seed);

struct TrainConfig {
  std::size_t batch = 256;
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  double train_fraction = 0.3;
  bool shuffle = true;
};

struct EpochStats {
  double loss = 0;
  double accuracy = 0;
  double seconds = 0;
};
using History = std::vector<EpochStats>;

/// Mini-batch Adam on softmax cross-entropy over split.train.
template <typename T>
History train(Model<T>& model, const PatchSet& patches, const SplitIndices& split, const TrainConfig& cfg);

/// Argmax class per patch (lowest index wins ties), inference mode.
template <typename T>
std::vector<int> predict(Model<T>& model, const PatchSet& patches, std::span<const std::size_t> indices,
                         std::size_t batch = 256);
template <typename T>
std::vector<int> predict(Model<T>& model, const PatchSet& patches, std::size_t batch = 256);

/// Gathers patches[indices] into a [n, 1, S, S, B] batch.
template <typename T>
Tensor<T> gather_batch(const PatchSet& patches, std::span<const std::size_t> indices);

/// Row-wise argmax, ties to the lowest index.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& scores);

struct Metrics {
  std::size_t classes = 0;
  std::vector<std::size_t> confusion;  // [truth, predicted], row-major
  double overall = 0;
  double average = 0;
  std::vector<double> per_class;       // recall per truth class; NaN when the class is absent
  double kappa = 0;

  std::size_t at(std::size_t truth, std::size_t pred) const { return confusion[truth * classes + pred]; }
};

Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, std::size_t classes);

}  // namespace hsi
