#pragma once

#include <cstdint>
#include <vector>

#include "hsi/scene.hpp"

namespace hsi {

/// Parameters of the stand-in scene generator used when the public datasets
/// are not available.
///
/// Each class id g owns a smooth spectral prototype (a sum of Gaussian bumps
/// over the band axis) derived from `prototype_seed` and g alone, so two scenes
/// generated with the same prototype seed share their class spectra. The scene
/// is tiled with block×block squares, each assigned one of `class_ids` or, with
/// probability `background_fraction`, unlabeled background. Every pixel is its
/// prototype times a brightness factor plus white noise of deviation `noise`.
struct SyntheticParams {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t bands = 48;
  std::size_t block = 16;
  std::vector<std::uint16_t> class_ids;  // empty → 1..16
  double noise = 0.8;
  double brightness_jitter = 0.1;
  double background_fraction = 0.25;
  std::uint64_t prototype_seed = 2021;
  std::uint64_t seed = 7;
};

struct SyntheticScene {
  HyperCube cube;
  GroundTruth gt;
};

/// Class prototype spectrum (class 0 is the background material).
std::vector<double> synthetic_prototype(std::uint16_t class_id, std::size_t bands, std::uint64_t prototype_seed);

SyntheticScene generate_scene(const SyntheticParams& p);

/// Stand-in for the 16-class source scene (128×128).
SyntheticParams synthetic_source_params();
/// Stand-in for the 6-class target scene: 86×83 pixels, class ids 1, 10, 11,
/// 12, 13, 14 drawn from the source's prototypes, as in the real sub-scene.
SyntheticParams synthetic_target_params();

}  // namespace hsi
