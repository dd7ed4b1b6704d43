#include "hsi/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hsi/rng.hpp"

namespace hsi {

template <typename T>
Model<T>::Model(const Model& other) : input_shape(other.input_shape), class_values(other.class_values) {
  for (const auto& l : other.layers) layers.push_back(l->clone());
}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
nn::Layer<T>& Model<T>::add(std::unique_ptr<nn::Layer<T>> layer, std::string name) {
  for (const auto& l : layers)
    if (l->name == name) throw StructureError("duplicate layer name '" + name + "'");
  layer->output_shape(shape_after(layers.size()));
  layer->name = std::move(name);
  layers.push_back(std::move(layer));
  return *layers.back();
}

template <typename T>
Shape Model<T>::shape_after(std::size_t upto) const {
  if (input_shape.size() != 4) throw StructureError("model has no input signature");
  Shape s = input_shape;
  for (std::size_t i = 0; i < std::min(upto, layers.size()); ++i) s = layers[i]->output_shape(s);
  return s;
}

template <typename T>
std::size_t Model<T>::num_classes() const {
  const Shape s = shape_after(layers.size());
  if (layers.empty() || layers.back()->kind() != "dense" || s.size() != 1)
    throw StructureError("model does not end in a dense classifier layer");
  return s[0];
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch, nn::Mode mode, std::size_t from, std::size_t to) {
  to = std::min(to, layers.size());
  if (from >= to) return batch;
  Tensor<T> x = layers[from]->forward(batch, mode);
  for (std::size_t i = from + 1; i < to; ++i) x = layers[i]->forward(x, mode);
  return x;
}

template <typename T>
void Model<T>::backward(const Tensor<T>& grad_logits, std::size_t from) {
  const std::size_t stop = std::max(from, first_trainable());
  if (stop >= layers.size()) return;
  Tensor<T> g = grad_logits;
  for (std::size_t i = layers.size(); i-- > stop;) g = layers[i]->backward(g, i > stop);
}

template <typename T>
std::vector<nn::Param<T>> Model<T>::params() {
  std::vector<nn::Param<T>> out;
  for (auto& l : layers)
    for (auto p : l->params()) {
      p.name = l->name + "." + p.name;
      out.push_back(p);
    }
  return out;
}

template <typename T>
std::size_t Model<T>::param_count() const {
  const auto c = layer_param_counts();
  return std::accumulate(c.begin(), c.end(), std::size_t{0});
}

template <typename T>
std::size_t Model<T>::trainable_param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    if (!l->frozen) n += l->param_count();
  return n;
}

template <typename T>
std::vector<std::size_t> Model<T>::layer_param_counts() const {
  std::vector<std::size_t> out;
  for (const auto& l : layers)
    if (const auto n = l->param_count(); n > 0) out.push_back(n);
  return out;
}

template <typename T>
std::size_t Model<T>::first_trainable() const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (!layers[i]->frozen && layers[i]->param_count() > 0) return i;
  return layers.size();
}

template <typename T>
std::size_t Model<T>::frozen_prefix() const {
  std::size_t i = 0;
  while (i < layers.size() && layers[i]->frozen && !layers[i]->stochastic()) ++i;
  return i;
}

template <typename T>
Checkpoint Model<T>::to_checkpoint() const {
  Checkpoint ck;
  for (const auto& l : layers)
    for (const auto& p : l->params()) ck.add(l->name + "." + p.name, p.value->template cast<float>());
  return ck;
}

template <typename T>
void Model<T>::load_parameters(const Checkpoint& ckpt) {
  for (auto& p : params()) {
    const Tensor<float>* t = ckpt.find(p.name);
    if (!t) throw FormatError("checkpoint lacks parameter '" + p.name + "'");
    if (t->shape() != p.value->shape())
      throw FormatError("checkpoint tensor '" + p.name + "' has shape " + shape_str(t->shape()) + ", model expects " +
                        shape_str(p.value->shape()));
    *p.value = t->template cast<T>();
  }
}

template <typename T>
std::string Model<T>::manifest() const {
  std::ostringstream os;
  os << "# hsitl layer manifest v1\n";
  os << "input " << input_shape.at(1) << ' ' << input_shape.at(2) << ' ' << input_shape.at(3) << '\n';
  os << "classes";
  for (auto c : class_values) os << ' ' << c;
  os << '\n';
  for (const auto& l : layers) {
    os << "layer " << l->name << ' ' << l->kind() << ' ' << (l->frozen ? 1 : 0);
    if (const auto d = l->describe(); !d.empty()) os << ' ' << d;
    os << '\n';
  }
  return os.str();
}

template <typename T>
Model<T> Model<T>::from_manifest(const std::string& text) {
  Model m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("manifest line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "input") {
      std::size_t s1, s2, b;
      if (!(ls >> s1 >> s2 >> b) || s1 != s2) fail("bad input signature");
      m.input_shape = {1, s1, s2, b};
    } else if (tag == "classes") {
      unsigned v;
      while (ls >> v) m.class_values.push_back(static_cast<std::uint16_t>(v));
    } else if (tag == "layer") {
      std::string name, kind;
      int frozen;
      if (!(ls >> name >> kind >> frozen)) fail("bad layer line");
      std::unique_ptr<nn::Layer<T>> layer;
      if (kind == "conv3d") {
        std::size_t out, k1, k2, k3, cin;
        if (!(ls >> out >> k1 >> k2 >> k3 >> cin)) fail("bad conv3d shape");
        layer = std::make_unique<nn::Conv3D<T>>(cin, out, k1, k2, k3);
      } else if (kind == "dense") {
        std::size_t nin, nout;
        if (!(ls >> nin >> nout)) fail("bad dense shape");
        layer = std::make_unique<nn::Dense<T>>(nin, nout);
      } else if (kind == "relu") {
        layer = std::make_unique<nn::ReLU<T>>();
      } else if (kind == "flatten") {
        layer = std::make_unique<nn::Flatten<T>>();
      } else if (kind == "dropout") {
        double rate;
        if (!(ls >> rate)) fail("bad dropout rate");
        layer = std::make_unique<nn::Dropout<T>>(rate, 0);
      } else {
        fail("unknown layer kind '" + kind + "'");
      }
      layer->frozen = frozen != 0;
      m.add(std::move(layer), name);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (m.input_shape.empty()) throw FormatError("manifest has no input signature");
  return m;
}

// ---- architectures ------------------------------------------------------------

namespace {

template <typename T>
void add_conv(Model<T>& m, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed) {
  auto c = std::make_unique<nn::Conv3D<T>>(in, out, 3, 3, 3);
  c->kernels = nn::init_glorot<T>(c->kernels.shape(), c->fan_in(), c->fan_out(), Rng::derive(seed, "init/" + name).next());
  m.add(std::move(c), name);
}

template <typename T>
void add_dense(Model<T>& m, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed) {
  auto d = std::make_unique<nn::Dense<T>>(in, out);
  d->weights = nn::init_glorot<T>(d->weights.shape(), in, out, Rng::derive(seed, "init/" + name).next());
  m.add(std::move(d), name);
}

}  // namespace

template <typename T>
Model<T> build_base_model(std::size_t patch_size, std::size_t bands, std::size_t classes, std::uint64_t seed) {
  if (patch_size < 7 || bands < 7)
    throw ShapeError("base model needs patch size and bands >= 7 for three 3x3x3 valid convolutions");
  if (classes < 2) throw ParamError("need at least 2 classes");
  Model<T> m(patch_size, bands);
  add_conv(m, "conv1", 1, 8, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu1");
  add_conv(m, "conv2", 8, 16, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu2");
  add_conv(m, "conv3", 16, 32, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu3");
  m.add(std::make_unique<nn::Flatten<T>>(), "flatten");
  const std::size_t width = m.shape_after(m.layers.size())[0];
  add_dense(m, "dense1", width, 256, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu4");
  add_dense(m, "dense2", 256, 128, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu5");
  add_dense(m, "dense3", 128, classes, seed);
  return m;
}

template <typename T>
Model<T> build_simple_model(std::size_t patch_size, std::size_t bands, std::size_t classes, std::uint64_t seed) {
  if (patch_size < 3 || bands < 3) throw ShapeError("simple model needs patch size and bands >= 3");
  if (classes < 2) throw ParamError("need at least 2 classes");
  Model<T> m(patch_size, bands);
  add_conv(m, "conv1", 1, 8, seed);
  m.add(std::make_unique<nn::ReLU<T>>(), "relu1");
  m.add(std::make_unique<nn::Flatten<T>>(), "flatten");
  add_dense(m, "dense1", m.shape_after(m.layers.size())[0], classes, seed);
  return m;
}

// ---- training -----------------------------------------------------------------

template <typename T>
Tensor<T> gather_batch(const PatchSet& patches, std::span<const std::size_t> indices) {
  const std::size_t len = patches.patch_len();
  Tensor<T> x({indices.size(), 1, patches.size, patches.size, patches.bands});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= patches.count()) throw ShapeError("patch index out of range");
    std::copy_n(patches.patch(indices[r]), len, x.raw() + r * len);
  }
  return x;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& scores) {
  const std::size_t n = scores.extent(0), k = scores.extent(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = scores.raw() + i * k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

void check_signature(const Shape& input_shape, const PatchSet& patches) {
  if (input_shape.size() != 4 || input_shape[1] != patches.size || input_shape[3] != patches.bands)
    throw ShapeError("patches are " + std::to_string(patches.size) + "x" + std::to_string(patches.size) + "x" +
                     std::to_string(patches.bands) + ", model expects input " + shape_str(input_shape));
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& src, std::span<const std::size_t> rows) {
  Shape s = src.shape();
  const std::size_t len = src.size() / s[0];
  s[0] = rows.size();
  Tensor<T> out(s);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(src.raw() + rows[r] * len, len, out.raw() + r * len);
  return out;
}

}  // namespace

template <typename T>
History train(Model<T>& model, const PatchSet& patches, const SplitIndices& split, const TrainConfig& cfg) {
  check_signature(model.input_shape, patches);
  if (cfg.batch < 1) throw ParamError("batch size must be >= 1");
  History history;
  if (cfg.epochs == 0) return history;
  const std::vector<std::size_t>& rows = split.train;
  const std::size_t n = rows.size();
  if (n == 0) throw DataError("training split is empty");

  std::vector<int> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = patches.labels.at(rows[i]);

  for (std::size_t i = 0; i < model.layers.size(); ++i)
    if (auto* d = dynamic_cast<nn::Dropout<T>*>(model.layers[i].get()))
      d->reseed(Rng::derive(cfg.seed, "dropout", i).next());

  // Frozen deterministic leading layers see the same inputs every epoch, so
  // their outputs are computed once.
  const std::size_t prefix = model.frozen_prefix();
  Tensor<T> features;
  if (prefix > 0) {
    Shape fs = model.shape_after(prefix);
    fs.insert(fs.begin(), n);
    features = Tensor<T>(fs);
    const std::size_t len = features.size() / n;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t end = std::min(n, start + cfg.batch);
      const auto chunk = model.forward(gather_batch<T>(patches, std::span(rows).subspan(start, end - start)),
                                       nn::Mode::infer, 0, prefix);
      std::copy_n(chunk.raw(), chunk.size(), features.raw() + start * len);
    }
  }

  auto params = model.params();
  nn::AdamState<T> adam;
  adam.cfg.lr = cfg.lr;
  std::vector<std::size_t> order(n), batch_rows, batch_src;
  std::vector<int> batch_targets;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      Rng rng = Rng::derive(cfg.seed, "shuffle", epoch);
      rng.shuffle(order);
    }
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0, b = 0; start < n; start += cfg.batch, ++b) {
      const std::size_t end = std::min(n, start + cfg.batch);
      batch_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
      batch_targets.clear();
      for (auto r : batch_rows) batch_targets.push_back(targets[r]);

      Tensor<T> x;
      if (prefix > 0) {
        x = gather_rows(features, batch_rows);
      } else {
        batch_src.clear();
        for (auto r : batch_rows) batch_src.push_back(rows[r]);
        x = gather_batch<T>(patches, batch_src);
      }
      const Tensor<T> logits = model.forward(x, nn::Mode::train, prefix);
      const auto res = nn::softmax_xent<T>(logits, batch_targets);
      if (!std::isfinite(static_cast<double>(res.loss)))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b + 1));
      model.backward(res.grad, prefix);
      nn::adam_step<T>(params, adam);

      loss_sum += static_cast<double>(res.loss) * static_cast<double>(batch_rows.size());
      const auto pred = argmax_rows(logits);
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch_targets[i];
    }
    const auto t1 = std::chrono::steady_clock::now();
    history.push_back({loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n),
                       std::chrono::duration<double>(t1 - t0).count()});
  }
  return history;
}

template <typename T>
std::vector<int> predict(Model<T>& model, const PatchSet& patches, std::span<const std::size_t> indices,
                         std::size_t batch) {
  check_signature(model.input_shape, patches);
  if (batch < 1) throw ParamError("batch size must be >= 1");
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch) {
    const std::size_t end = std::min(indices.size(), start + batch);
    const auto logits = model.forward(gather_batch<T>(patches, indices.subspan(start, end - start)), nn::Mode::infer);
    const auto p = argmax_rows(logits);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
std::vector<int> predict(Model<T>& model, const PatchSet& patches, std::size_t batch) {
  std::vector<std::size_t> all(patches.count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return predict(model, patches, std::span<const std::size_t>(all), batch);
}

Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, std::size_t classes) {
  if (predicted.size() != truth.size())
    throw DataError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw DataError("evaluate: no samples");
  Metrics m;
  m.classes = classes;
  m.confusion.assign(classes * classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes ||
        static_cast<std::size_t>(predicted[i]) >= classes)
      throw DataError("evaluate: class id outside [0, " + std::to_string(classes) + ")");
    ++m.confusion[static_cast<std::size_t>(truth[i]) * classes + static_cast<std::size_t>(predicted[i])];
  }
  const double n = static_cast<double>(truth.size());
  std::size_t diag = 0;
  double chance = 0, avg = 0;
  std::size_t present = 0;
  m.per_class.assign(classes, std::nan(""));
  for (std::size_t k = 0; k < classes; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      row += m.at(k, j);
      col += m.at(j, k);
    }
    diag += m.at(k, k);
    chance += static_cast<double>(row) * static_cast<double>(col);
    if (row > 0) {
      m.per_class[k] = static_cast<double>(m.at(k, k)) / static_cast<double>(row);
      avg += m.per_class[k];
      ++present;
    }
  }
  m.overall = static_cast<double>(diag) / n;
  m.average = avg / static_cast<double>(present);
  const double pe = chance / (n * n);
  m.kappa = pe < 1.0 ? (m.overall - pe) / (1.0 - pe) : (m.overall == 1.0 ? 1.0 : 0.0);
  return m;
}

#define HSI_MODEL_INSTANTIATE(T)                                                                         \
  template class Model<T>;                                                                               \
  template Model<T> build_base_model<T>(std::size_t, std::size_t, std::size_t, std::uint64_t);           \
  template Model<T> build_simple_model<T>(std::size_t, std::size_t, std::size_t, std::uint64_t);         \
  template History train<T>(Model<T>&, const PatchSet&, const SplitIndices&, const TrainConfig&);        \
  template std::vector<int> predict<T>(Model<T>&, const PatchSet&, std::span<const std::size_t>,         \
                                       std::size_t);                                                     \
  template std::vector<int> predict<T>(Model<T>&, const PatchSet&, std::size_t);                         \
  template Tensor<T> gather_batch<T>(const PatchSet&, std::span<const std::size_t>);                     \
  template std::vector<int> argmax_rows<T>(const Tensor<T>&);

HSI_MODEL_INSTANTIATE(float)
HSI_MODEL_INSTANTIATE(double)

}  // namespace hsi
