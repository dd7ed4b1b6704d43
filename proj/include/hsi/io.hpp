#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hsi/scene.hpp"
#include "hsi/tensor.hpp"

namespace hsi {

namespace fs = std::filesystem;

/// Named float tensors in a fixed order.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::vector<std::pair<std::string, Tensor<float>>> entries;

  void add(std::string name, Tensor<float> t) { entries.emplace_back(std::move(name), std::move(t)); }
  const Tensor<float>* find(const std::string& name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Cubes: native HSC1, or NPY (C order, little endian) with a rank-3 array.
HyperCube read_cube(const fs::path& path);
void write_cube(const HyperCube& cube, const fs::path& path);

// Ground truth: native HSG1, or NPY rank-2 integer array.
GroundTruth read_ground_truth(const fs::path& path);
void write_ground_truth(const GroundTruth& gt, const fs::path& path);

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path);
Checkpoint load_checkpoint(const fs::path& path);

// Patch archive HSP1. Labels are stored as ground-truth ids.
void write_patch_archive(const PatchSet& ps, const fs::path& path);
PatchSet read_patch_archive(const fs::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Class 0 is black; class k >= 1 takes hue 360*(k-1)/16 at full saturation and value.
Rgb palette_color(std::uint16_t label);

/// Binary P6 image, one pixel per grid cell: x runs over width, y over height.
std::vector<std::uint8_t> encode_label_map(const GroundTruth& labels);
void render_label_map(const GroundTruth& labels, const fs::path& path);

// In-memory codecs, shared by the file functions and the tests.
std::vector<std::uint8_t> encode_cube(const HyperCube& cube);
HyperCube decode_cube(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::string& origin = "<memory>");

std::vector<std::uint8_t> read_file(const fs::path& path);
void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const fs::path& path, const std::string& text);

}  // namespace hsi
