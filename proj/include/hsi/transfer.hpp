#pragma once

#include <cstdint>
#include <vector>

#include "hsi/model.hpp"

namespace hsi {

struct TransferConfig {
  std::size_t num_classes = 6;
  std::vector<std::size_t> hidden = {256, 128};
  double dropout = 0.4;
  double train_fraction = 0.4;
  std::size_t epochs = 3;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

/// Every layer up to and including the flatten layer, all marked frozen.
template <typename T>
Model<T> extract_stump(const Model<T>& model);

/// stump → [dense(h) → ReLU → dropout] per hidden width → dense(num_classes).
/// Head layers are named head_*; stump layers keep their names.
template <typename T>
Model<T> attach_head(const Model<T>& stump, const TransferConfig& cfg, std::uint64_t seed);

struct FineTuneResult {
  History history;
  SplitIndices split;
};

/// Stratified split of the target patches, then training of the unfrozen head.
template <typename T>
FineTuneResult fine_tune(Model<T>& model, const PatchSet& patches, const TransferConfig& cfg);

}  // namespace hsi
