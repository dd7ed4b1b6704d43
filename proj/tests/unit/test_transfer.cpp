#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsi/harness.hpp"

using namespace hsi;

TEST_CASE("stump of the base model") {
  const auto base = build_base_model<float>(7, 15, 16, 1);
  const auto stump = extract_stump(base);
  CHECK(stump.layers.size() == 7);
  CHECK(stump.layers.back()->kind() == "flatten");
  CHECK(stump.param_count() == 17552);
  CHECK(stump.trainable_param_count() == 0);
  CHECK(stump.shape_after(stump.layers.size()) == Shape{288});
  for (const auto& l : stump.layers) CHECK(l->frozen);
  CHECK(extract_stump(stump).manifest() == stump.manifest());
  CHECK(extract_stump(stump).to_checkpoint() == stump.to_checkpoint());
  // Stump weights come straight from the base model.
  for (const auto& [name, t] : stump.to_checkpoint().entries) CHECK(*base.to_checkpoint().find(name) == t);
}

TEST_CASE("head on the stump") {
  const auto stump = extract_stump(build_base_model<float>(7, 15, 16, 1));
  TransferConfig cfg;
  const auto m = attach_head(stump, cfg, 3);
  CHECK(m.trainable_param_count() == 107654);
  CHECK(m.param_count() == 17552 + 107654);
  CHECK(m.num_classes() == 6);
  std::size_t dropouts = 0;
  for (const auto& l : m.layers)
    if (auto* d = dynamic_cast<const nn::Dropout<float>*>(l.get())) {
      CHECK(d->rate() == 0.4);
      CHECK(l->name.rfind("head_", 0) == 0);
      ++dropouts;
    }
  CHECK(dropouts == 2);
  CHECK(m.frozen_prefix() == 7);
}

TEST_CASE("structure errors") {
  Model<float> flat(3, 3);
  flat.add(std::make_unique<nn::Conv3D<float>>(1, 2, 3, 3, 3), "conv");
  CHECK_THROWS_AS(extract_stump(flat), StructureError);
  const auto base = build_base_model<float>(7, 15, 16, 1);
  CHECK_THROWS_AS(attach_head(base, TransferConfig{}, 1), StructureError);
  TransferConfig zero;
  zero.num_classes = 0;
  CHECK_THROWS_AS(attach_head(extract_stump(base), zero, 1), Error);
}

TEST_CASE("fine-tuning leaves the stump bytes alone and learns the target") {
  auto src = generate_scene([] {
    auto p = synthetic_source_params();
    p.width = p.height = 48;
    return p;
  }());
  const auto pca = pca_fit(src.cube, 15);
  const auto sp = extract_patches(pca_apply(pca, src.cube), src.gt, 7);
  auto base = build_base_model<float>(7, 15, sp.num_classes(), 1);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 64;
  train(base, sp, stratified_split(sp.labels, 0.3, 1), tc);

  auto tgt = generate_scene(synthetic_target_params());
  const auto tp = extract_patches(pca_apply(pca, tgt.cube), tgt.gt, 7);
  CHECK(tp.num_classes() == 6);
  CHECK(tp.class_values == std::vector<std::uint16_t>{1, 10, 11, 12, 13, 14});

  TransferConfig cfg;
  auto m = attach_head(extract_stump(base), cfg, 1);
  const auto before = parameter_bytes(m, 7);
  const auto r = fine_tune(m, tp, cfg);
  CHECK(parameter_bytes(m, 7) == before);
  CHECK(r.history.size() == 3);
  CHECK(r.history.back().loss < r.history.front().loss);
  CHECK(m.class_values == tp.class_values);
  const auto pred = predict(m, tp, std::span<const std::size_t>(r.split.test));
  std::vector<int> truth;
  for (auto i : r.split.test) truth.push_back(tp.labels[i]);
  CHECK(evaluate(pred, truth, 6).overall > 0.6);
}
