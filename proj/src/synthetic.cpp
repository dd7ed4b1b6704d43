#include "hsi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsi/rng.hpp"

namespace hsi {

std::vector<double> synthetic_prototype(std::uint16_t class_id, std::size_t bands, std::uint64_t prototype_seed) {
  Rng rng = Rng::derive(prototype_seed, "prototype", class_id);
  std::vector<double> s(bands, rng.uniform(0.8, 1.2));
  const int bumps = 4;
  for (int k = 0; k < bumps; ++k) {
    const double centre = rng.uniform(0.0, static_cast<double>(bands));
    const double width = rng.uniform(0.05, 0.25) * static_cast<double>(bands);
    const double amp = rng.uniform(-0.8, 0.8);
    for (std::size_t b = 0; b < bands; ++b) {
      const double u = (static_cast<double>(b) - centre) / width;
      s[b] += amp * std::exp(-0.5 * u * u);
    }
  }
  return s;
}

SyntheticScene generate_scene(const SyntheticParams& p) {
  if (p.width == 0 || p.height == 0 || p.bands == 0 || p.block == 0) throw ParamError("synthetic scene extents must be >= 1");
  std::vector<std::uint16_t> ids = p.class_ids;
  if (ids.empty()) {
    ids.resize(16);
    std::iota(ids.begin(), ids.end(), std::uint16_t{1});
  }

  std::vector<std::vector<double>> protos(*std::max_element(ids.begin(), ids.end()) + 1u);
  protos[0] = synthetic_prototype(0, p.bands, p.prototype_seed);
  for (auto id : ids) protos[id] = synthetic_prototype(id, p.bands, p.prototype_seed);

  SyntheticScene sc{HyperCube(p.width, p.height, p.bands), GroundTruth(p.width, p.height)};
  Rng layout = Rng::derive(p.seed, "layout");
  const std::size_t bw = (p.width + p.block - 1) / p.block, bh = (p.height + p.block - 1) / p.block;
  std::vector<std::uint16_t> block_class(bw * bh);
  // Every class gets at least one block when there is room, the rest are random.
  std::vector<std::size_t> slots(bw * bh);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  layout.shuffle(slots);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i < ids.size()) block_class[slots[i]] = ids[i];
    else if (layout.uniform() < p.background_fraction) block_class[slots[i]] = 0;
    else block_class[slots[i]] = ids[layout.below(ids.size())];
  }

  Rng noise = Rng::derive(p.seed, "noise");
  for (std::size_t a = 0; a < p.width; ++a)
    for (std::size_t b = 0; b < p.height; ++b) {
      const std::uint16_t cls = block_class[(a / p.block) * bh + b / p.block];
      sc.gt.at(a, b) = cls;
      const auto& proto = protos[cls];
      const double gain = 1.0 + p.brightness_jitter * noise.normal();
      float* px = sc.cube.spectrum(a, b);
      for (std::size_t r = 0; r < p.bands; ++r) px[r] = static_cast<float>(gain * proto[r] + p.noise * noise.normal());
    }
  return sc;
}

SyntheticParams synthetic_source_params() {
  SyntheticParams p;
  p.width = 128;
  p.height = 128;
  p.seed = 11;
  return p;
}

SyntheticParams synthetic_target_params() {
  SyntheticParams p;
  p.width = 86;
  p.height = 83;
  p.class_ids = {1, 10, 11, 12, 13, 14};
  p.seed = 12;
  return p;
}

}  // namespace hsi
