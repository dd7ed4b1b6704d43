#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hsi/tensor.hpp"

namespace hsi {

/// A scene's spectral-spatial data. values has shape [width, height, bands].
struct HyperCube {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  Tensor<float> values;

  HyperCube() = default;
  HyperCube(std::size_t w, std::size_t h, std::size_t b, float fill = 0.0f)
      : width(w), height(h), bands(b), values({w, h, b}, fill) {}
  explicit HyperCube(Tensor<float> v)
      : width(v.extent(0)), height(v.extent(1)), bands(v.extent(2)), values(std::move(v)) {
    if (values.rank() != 3) throw ShapeError("cube tensor must be rank 3");
  }

  std::size_t pixels() const noexcept { return width * height; }
  const float* spectrum(std::size_t p, std::size_t q) const {
    return values.raw() + (p * height + q) * bands;
  }
  float* spectrum(std::size_t p, std::size_t q) { return values.raw() + (p * height + q) * bands; }

  friend bool operator==(const HyperCube&, const HyperCube&) = default;
};

/// Per-pixel class ids aligned with a cube; 0 is unlabeled background.
struct GroundTruth {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> labels;  // row-major [width, height]

  GroundTruth() = default;
  GroundTruth(std::size_t w, std::size_t h, std::uint16_t fill = 0)
      : width(w), height(h), labels(w * h, fill) {}

  std::uint16_t& at(std::size_t p, std::size_t q) { return labels[p * height + q]; }
  std::uint16_t at(std::size_t p, std::size_t q) const { return labels[p * height + q]; }
  std::size_t labeled_count() const;
  std::uint16_t max_label() const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// N labeled S×S×B sub-cubes, each centred on a labeled pixel.
///
/// labels are compact class indices 0..K-1; class_values[k] is the ground-truth
/// id that index k stands for (ascending). When a scene uses every id 1..K the
/// compact index is simply id - 1.
struct PatchSet {
  std::size_t size = 0;   // S
  std::size_t bands = 0;  // B
  Tensor<float> patches;  // [N, S, S, B]
  std::vector<int> labels;
  std::vector<std::uint16_t> class_values;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> coords;

  std::size_t count() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return class_values.size(); }
  std::size_t patch_len() const noexcept { return size * size * bands; }
  const float* patch(std::size_t i) const { return patches.raw() + i * patch_len(); }

  friend bool operator==(const PatchSet&, const PatchSet&) = default;
};

}  // namespace hsi
