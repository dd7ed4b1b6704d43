#include "hsi/transfer.hpp"

#include <memory>

namespace hsi {

template <typename T>
Model<T> extract_stump(const Model<T>& model) {
  std::size_t cut = model.layers.size();
  for (std::size_t i = model.layers.size(); i-- > 0;)
    if (model.layers[i]->kind() == "flatten") {
      cut = i;
      break;
    }
  if (cut == model.layers.size()) throw StructureError("model has no flatten layer to cut at");

  Model<T> stump;
  stump.input_shape = model.input_shape;
  for (std::size_t i = 0; i <= cut; ++i) {
    auto layer = model.layers[i]->clone();
    layer->frozen = true;
    stump.layers.push_back(std::move(layer));
  }
  return stump;
}

template <typename T>
Model<T> attach_head(const Model<T>& stump, const TransferConfig& cfg, std::uint64_t seed) {
  if (stump.layers.empty() || stump.layers.back()->kind() != "flatten")
    throw StructureError("attach_head needs a flatten-terminated stump");
  for (const auto& l : stump.layers)
    if (!l->frozen) throw StructureError("attach_head needs a frozen stump; layer '" + l->name + "' is trainable");
  if (cfg.num_classes < 2) throw ParamError("target class count must be >= 2");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ParamError("dropout must lie in [0, 1)");

  Model<T> m(stump);
  m.class_values.clear();
  std::size_t width = m.shape_after(m.layers.size()).at(0);
  std::vector<std::size_t> widths = cfg.hidden;
  widths.push_back(cfg.num_classes);
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (widths[k] == 0) throw ShapeError("head layer width must be >= 1");
    const std::string idx = std::to_string(k + 1);
    auto d = std::make_unique<nn::Dense<T>>(width, widths[k]);
    d->weights = nn::init_glorot<T>(d->weights.shape(), width, widths[k],
                                    Rng::derive(seed, "init/head_dense" + idx).next());
    m.add(std::move(d), "head_dense" + idx);
    if (k + 1 < widths.size()) {
      m.add(std::make_unique<nn::ReLU<T>>(), "head_relu" + idx);
      m.add(std::make_unique<nn::Dropout<T>>(cfg.dropout, Rng::derive(seed, "dropout", k).next()),
            "head_dropout" + idx);
    }
    width = widths[k];
  }
  return m;
}

template <typename T>
FineTuneResult fine_tune(Model<T>& model, const PatchSet& patches, const TransferConfig& cfg) {
  if (model.input_shape.size() != 4 || model.input_shape[1] != patches.size || model.input_shape[3] != patches.bands)
    throw ShapeError("target patches are " + std::to_string(patches.size) + "x" + std::to_string(patches.size) +
                     "x" + std::to_string(patches.bands) + ", stump expects input " + shape_str(model.input_shape));
  if (patches.num_classes() != model.num_classes())
    throw ShapeError("target set has " + std::to_string(patches.num_classes()) + " classes, head has " +
                     std::to_string(model.num_classes()));

  FineTuneResult r;
  r.split = stratified_split(patches.labels, cfg.train_fraction, cfg.seed);
  TrainConfig tc;
  tc.batch = cfg.batch;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.seed = cfg.seed;
  tc.train_fraction = cfg.train_fraction;
  r.history = train(model, patches, r.split, tc);
  model.class_values = patches.class_values;
  return r;
}

#define HSI_TRANSFER_INSTANTIATE(T)                                                          \
  template Model<T> extract_stump<T>(const Model<T>&);                                       \
  template Model<T> attach_head<T>(const Model<T>&, const TransferConfig&, std::uint64_t);   \
  template FineTuneResult fine_tune<T>(Model<T>&, const PatchSet&, const TransferConfig&);

HSI_TRANSFER_INSTANTIATE(float)
HSI_TRANSFER_INSTANTIATE(double)

}  // namespace hsi
