#include "hsi/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "hsi/kernels.hpp"

namespace hsi {

namespace {

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) kernels::set_threads(cfg.threads);
}

std::vector<int> subset_labels(const PatchSet& ps, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(ps.labels[i]);
  return out;
}

// Re-indexes patch labels onto the model's output units via ground-truth ids.
PatchSet align_labels(const Model<float>& model, PatchSet ps) {
  if (model.class_values.empty() || model.class_values == ps.class_values) return ps;
  std::vector<int> remap(ps.class_values.size());
  for (std::size_t k = 0; k < ps.class_values.size(); ++k) {
    const auto it = std::find(model.class_values.begin(), model.class_values.end(), ps.class_values[k]);
    if (it == model.class_values.end())
      throw DataError("class id " + std::to_string(ps.class_values[k]) + " is unknown to the model");
    remap[k] = static_cast<int>(it - model.class_values.begin());
  }
  for (auto& l : ps.labels) l = remap[static_cast<std::size_t>(l)];
  ps.class_values = model.class_values;
  return ps;
}

Checkpoint pca_checkpoint(const PcaModel& m) {
  Checkpoint ck;
  auto vec = [](const std::vector<double>& v) {
    return Tensor<float>({v.size()}, std::vector<float>(v.begin(), v.end()));
  };
  ck.add("pca.mean", vec(m.mean));
  ck.add("pca.scale", vec(m.scale));
  ck.add("pca.components", m.components.cast<float>());
  ck.add("pca.eigenvalues", vec(m.eigenvalues));
  return ck;
}

PcaModel pca_from_checkpoint(const Checkpoint& ck) {
  auto get = [&](const char* name) {
    const Tensor<float>* t = ck.find(name);
    if (!t) throw FormatError(std::string("PCA file lacks '") + name + "'");
    return t;
  };
  PcaModel m;
  const auto* mean = get("pca.mean");
  const auto* scale = get("pca.scale");
  const auto* comp = get("pca.components");
  const auto* eig = get("pca.eigenvalues");
  m.mean.assign(mean->data().begin(), mean->data().end());
  m.scale.assign(scale->data().begin(), scale->data().end());
  m.eigenvalues.assign(eig->data().begin(), eig->data().end());
  m.components = comp->cast<double>();
  if (comp->rank() != 2 || comp->extent(0) != m.mean.size() || comp->extent(1) != m.eigenvalues.size() ||
      m.scale.size() != m.mean.size())
    throw FormatError("PCA file has inconsistent shapes");
  return m;
}

fs::path ensure_out(const ExperimentConfig& cfg) {
  fs::path out(cfg.out);
  fs::create_directories(out);
  return out;
}

}  // namespace

// ---- config -----------------------------------------------------------------------

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParamError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParamError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

// ---- reports ----------------------------------------------------------------------

void RunReport::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}
void RunReport::set(const std::string& key, double value) { set(key, fmt_double(value)); }
void RunReport::set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
void RunReport::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

const std::string* RunReport::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

void RunReport::echo_config(const ExperimentConfig& c) {
  set("version", std::string(kVersion));
  set("seed", std::to_string(c.seed));
  set("config.cube", c.cube);
  set("config.gt", c.gt);
  set("config.archive", c.archive);
  set("config.checkpoint", c.checkpoint);
  set("config.synthetic", c.synthetic);
  set("config.arch", c.arch);
  set("config.patch_size", c.patch_size);
  set("config.bands", c.bands);
  set("config.batch", c.batch);
  set("config.lr", c.lr);
  set("config.dropout", c.dropout);
  set("config.standardize", c.standardize);
  set("config.threads", std::to_string(c.threads));
}

void RunReport::add_metrics(const std::string& prefix, const Metrics& m) {
  set(prefix + ".samples", std::accumulate(m.confusion.begin(), m.confusion.end(), std::size_t{0}));
  set(prefix + ".overall_accuracy", m.overall);
  set(prefix + ".average_accuracy", m.average);
  set(prefix + ".kappa", m.kappa);
}

std::string RunReport::text(bool include_timings) const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) {
    if (!include_timings && k.rfind("time.", 0) == 0) continue;
    os << k << " = " << v << '\n';
  }
  return os.str();
}

void RunReport::write(const fs::path& dir) const {
  fs::create_directories(dir);
  write_text(dir / "report.txt", text());
  for (const auto& [file, csv] : tables_) write_text(dir / file, csv);
}

std::map<std::string, std::string> RunReport::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

std::string history_csv(const History& h) {
  std::ostringstream os;
  // Timings stay out so the table is reproducible byte for byte.
  os << "epoch,loss,accuracy\n";
  for (std::size_t e = 0; e < h.size(); ++e)
    os << e + 1 << ',' << fmt_double(h[e].loss) << ',' << fmt_double(h[e].accuracy) << '\n';
  return os.str();
}

std::string confusion_csv(const Metrics& m, const std::vector<std::uint16_t>& class_values) {
  auto id = [&](std::size_t k) { return k < class_values.size() ? class_values[k] : static_cast<std::size_t>(k + 1); };
  std::ostringstream os;
  os << "truth\\predicted";
  for (std::size_t k = 0; k < m.classes; ++k) os << ',' << id(k);
  os << '\n';
  for (std::size_t t = 0; t < m.classes; ++t) {
    os << id(t);
    for (std::size_t p = 0; p < m.classes; ++p) os << ',' << m.at(t, p);
    os << '\n';
  }
  return os.str();
}

// ---- persistence ------------------------------------------------------------------

void save_model(const Model<float>& model, const fs::path& path) {
  save_checkpoint(model.to_checkpoint(), path);
  write_text(fs::path(path.string() + ".manifest"), model.manifest());
}

Model<float> load_model(const fs::path& path) {
  const auto text = read_file(fs::path(path.string() + ".manifest"));
  Model<float> m = Model<float>::from_manifest(std::string(text.begin(), text.end()));
  m.load_parameters(load_checkpoint(path));
  return m;
}

void write_split(const SplitIndices& split, const fs::path& path) {
  std::ostringstream os;
  os << "seed " << split.seed << "\ntrain";
  for (auto i : split.train) os << ' ' << i;
  os << "\ntest";
  for (auto i : split.test) os << ' ' << i;
  os << '\n';
  write_text(path, os.str());
}

SplitIndices read_split(const fs::path& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  SplitIndices s;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    std::size_t v;
    if (tag == "seed") ls >> s.seed;
    else if (tag == "train") while (ls >> v) s.train.push_back(v);
    else if (tag == "test") while (ls >> v) s.test.push_back(v);
    else if (!tag.empty()) throw FormatError(path.string() + ": unknown split record '" + tag + "'");
  }
  return s;
}

std::vector<std::uint8_t> parameter_bytes(const Model<float>& model, std::size_t layer_count) {
  Checkpoint ck;
  for (std::size_t i = 0; i < std::min(layer_count, model.layers.size()); ++i)
    for (const auto& p : model.layers[i]->params()) ck.add(model.layers[i]->name + "." + p.name, *p.value);
  return encode_checkpoint(ck);
}

// ---- pipeline ---------------------------------------------------------------------

Scene load_scene(const ExperimentConfig& cfg) {
  if (!cfg.synthetic.empty()) {
    SyntheticParams p;
    if (cfg.synthetic == "source") p = synthetic_source_params();
    else if (cfg.synthetic == "target") p = synthetic_target_params();
    else throw ParamError("--synthetic must be 'source' or 'target'");
    auto sc = generate_scene(p);
    return {std::move(sc.cube), std::move(sc.gt)};
  }
  if (cfg.cube.empty() || cfg.gt.empty()) throw ParamError("need --cube and --gt (or --synthetic)");
  Scene s{read_cube(cfg.cube), read_ground_truth(cfg.gt)};
  if (s.gt.width != s.cube.width || s.gt.height != s.cube.height)
    throw DataError("ground truth is " + std::to_string(s.gt.width) + "x" + std::to_string(s.gt.height) +
                    " but the cube is " + std::to_string(s.cube.width) + "x" + std::to_string(s.cube.height));
  return s;
}

Prepared prepare(const Scene& scene, std::size_t patch_size, std::size_t bands, const PcaOptions& opts,
                 const PcaModel* pca) {
  Prepared p;
  p.pca = pca ? *pca : pca_fit(scene.cube, bands, opts);
  p.patches = extract_patches(pca_apply(p.pca, scene.cube), scene.gt, patch_size);
  return p;
}

namespace {

PatchSet patches_for(const ExperimentConfig& cfg, const PcaModel* pca = nullptr) {
  if (!cfg.archive.empty()) return read_patch_archive(cfg.archive);
  return prepare(load_scene(cfg), cfg.patch_size, cfg.bands, {cfg.standardize}, pca).patches;
}

void add_class_counts(RunReport& r, const PatchSet& ps) {
  std::vector<std::size_t> counts(ps.num_classes(), 0);
  for (int l : ps.labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t k = 0; k < counts.size(); ++k) r.set("data.class." + std::to_string(ps.class_values[k]), counts[k]);
}

}  // namespace

Prepared cmd_prepare(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  const auto out = ensure_out(cfg);
  Prepared p = prepare(load_scene(cfg), cfg.patch_size, cfg.bands, {cfg.standardize});
  write_patch_archive(p.patches, out / "patches.hsp");
  save_checkpoint(pca_checkpoint(p.pca), out / "pca.hstl");

  RunReport r;
  r.echo_config(cfg);
  r.set("data.patches", p.patches.count());
  r.set("data.classes", p.patches.num_classes());
  add_class_counts(r, p.patches);
  double total = 0;
  for (double e : p.pca.eigenvalues) total += e;
  r.set("pca.retained_variance", total);
  for (std::size_t k = 0; k < p.pca.eigenvalues.size(); ++k)
    r.set("pca.eigenvalue." + std::to_string(k + 1), p.pca.eigenvalues[k]);
  r.write(out);
  return p;
}

TrainOutcome cmd_train(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  const auto out = ensure_out(cfg);
  const PatchSet ps = patches_for(cfg);

  TrainConfig tc;
  tc.batch = cfg.batch;
  tc.epochs = cfg.epochs.value_or(10);
  tc.lr = cfg.lr;
  tc.seed = cfg.seed;
  tc.train_fraction = cfg.train_frac.value_or(0.3);

  TrainOutcome o;
  if (cfg.arch == "base") o.model = build_base_model<float>(ps.size, ps.bands, ps.num_classes(), cfg.seed);
  else if (cfg.arch == "simple") o.model = build_simple_model<float>(ps.size, ps.bands, ps.num_classes(), cfg.seed);
  else throw ParamError("--arch must be 'base' or 'simple'");
  o.model.class_values = ps.class_values;

  o.split = stratified_split(ps.labels, tc.train_fraction, cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  o.history = train(o.model, ps, o.split, tc);
  const double secs = seconds_since(t0);
  const auto pred = predict(o.model, ps, std::span<const std::size_t>(o.split.test));
  o.test = evaluate(pred, subset_labels(ps, o.split.test), ps.num_classes());

  save_model(o.model, out / "model.hstl");
  write_split(o.split, out / "split.txt");

  RunReport& r = o.report;
  r.echo_config(cfg);
  r.set("phase", std::string("train"));
  r.set("config.epochs", tc.epochs);
  r.set("config.train_frac", tc.train_fraction);
  r.set("data.patches", ps.count());
  r.set("data.classes", ps.num_classes());
  r.set("data.train", o.split.train.size());
  r.set("data.test", o.split.test.size());
  r.set("model.parameters", o.model.param_count());
  r.set("model.trainable", o.model.trainable_param_count());
  {
    std::ostringstream os;
    const auto parts = o.model.layer_param_counts();
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? " + " : "") << parts[i];
    r.set("model.breakdown", os.str());
  }
  if (!o.history.empty()) {
    r.set("train.final_loss", o.history.back().loss);
    r.set("train.final_accuracy", o.history.back().accuracy);
  }
  r.add_metrics("test", o.test);
  r.set("time.train_seconds", secs);
  if (tc.epochs > 0)
    r.set("time.seconds_per_sample_epoch", secs / static_cast<double>(tc.epochs * o.split.train.size()));
  r.add_table("history.csv", history_csv(o.history));
  r.add_table("confusion.csv", confusion_csv(o.test, ps.class_values));
  r.write(out);
  return o;
}

TransferOutcome cmd_transfer(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  if (cfg.checkpoint.empty()) throw ParamError("transfer needs --checkpoint (the base model)");
  const auto out = ensure_out(cfg);
  const Model<float> base = load_model(cfg.checkpoint);

  std::optional<PcaModel> source_pca;
  if (!cfg.source_pca.empty()) source_pca = pca_from_checkpoint(load_checkpoint(cfg.source_pca));
  const PatchSet ps = patches_for(cfg, source_pca ? &*source_pca : nullptr);

  TransferConfig tcfg;
  tcfg.num_classes = ps.num_classes();
  tcfg.dropout = cfg.dropout;
  tcfg.train_fraction = cfg.train_frac.value_or(0.4);
  tcfg.epochs = cfg.epochs.value_or(3);
  tcfg.batch = cfg.batch;
  tcfg.lr = cfg.lr;
  tcfg.seed = cfg.seed;

  TransferOutcome o;
  const Model<float> stump = extract_stump(base);
  o.model = attach_head(stump, tcfg, cfg.seed);
  const std::size_t stump_layers = stump.layers.size();
  const auto before = parameter_bytes(o.model, stump_layers);

  const auto t0 = std::chrono::steady_clock::now();
  o.result = fine_tune(o.model, ps, tcfg);
  const double secs = seconds_since(t0);
  o.stump_unchanged = parameter_bytes(o.model, stump_layers) == before;

  const auto pred = predict(o.model, ps, std::span<const std::size_t>(o.result.split.test));
  o.test = evaluate(pred, subset_labels(ps, o.result.split.test), ps.num_classes());

  save_model(o.model, out / "model.hstl");
  write_split(o.result.split, out / "split.txt");

  RunReport& r = o.report;
  r.echo_config(cfg);
  r.set("phase", std::string("transfer"));
  r.set("config.epochs", tcfg.epochs);
  r.set("config.epochs_from", std::string(cfg.epochs ? "flag" : "default"));
  r.set("config.train_frac", tcfg.train_fraction);
  r.set("config.source_pca", cfg.source_pca.empty() ? std::string("own fit") : cfg.source_pca);
  r.set("data.patches", ps.count());
  r.set("data.classes", ps.num_classes());
  r.set("data.train", o.result.split.train.size());
  r.set("data.test", o.result.split.test.size());
  r.set("model.stump_parameters", stump.param_count());
  r.set("model.head_parameters", o.model.trainable_param_count());
  r.set("model.dropout", tcfg.dropout);
  r.set("freeze.stump_unchanged", o.stump_unchanged);
  r.add_metrics("test", o.test);
  r.set("time.fine_tune_seconds", secs);
  if (tcfg.epochs > 0) {
    const double per = secs / static_cast<double>(tcfg.epochs * o.result.split.train.size());
    r.set("time.seconds_per_sample_epoch", per);
    const fs::path base_report = fs::path(cfg.checkpoint).parent_path() / "report.txt";
    if (fs::exists(base_report)) {
      const auto bytes = read_file(base_report);
      const auto kv = RunReport::parse(std::string(bytes.begin(), bytes.end()));
      if (auto it = kv.find("time.seconds_per_sample_epoch"); it != kv.end()) {
        const double base_per = std::stod(it->second);
        r.set("time.base_seconds_per_sample_epoch", base_per);
        r.set("time.speed_ratio", per / base_per);
      }
    }
  }
  r.add_table("history.csv", history_csv(o.result.history));
  r.add_table("confusion.csv", confusion_csv(o.test, ps.class_values));
  r.write(out);
  return o;
}

Metrics cmd_eval(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  if (cfg.checkpoint.empty()) throw ParamError("eval needs --checkpoint");
  Model<float> model = load_model(cfg.checkpoint);
  const PatchSet ps = align_labels(model, patches_for(cfg));

  std::vector<std::size_t> idx;
  if (!cfg.split.empty() && cfg.subset != "all") {
    const SplitIndices split = read_split(cfg.split);
    if (cfg.subset == "train") idx = split.train;
    else if (cfg.subset == "test") idx = split.test;
    else throw ParamError("--subset must be train, test or all");
  } else {
    idx.resize(ps.count());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  for (auto i : idx)
    if (i >= ps.count()) throw DataError("split index " + std::to_string(i) + " exceeds the archive size");
  const auto pred = predict(model, ps, std::span<const std::size_t>(idx), cfg.batch);
  const Metrics m = evaluate(pred, subset_labels(ps, idx), model.num_classes());

  RunReport r;
  r.echo_config(cfg);
  r.set("phase", std::string("eval"));
  r.set("config.subset", cfg.split.empty() ? std::string("all") : cfg.subset);
  r.add_metrics("eval", m);
  for (std::size_t k = 0; k < m.classes; ++k)
    r.set("eval.class_accuracy." + std::to_string(k < ps.class_values.size() ? ps.class_values[k] : k + 1),
          m.per_class[k]);
  r.add_table("confusion.csv", confusion_csv(m, ps.class_values));
  r.write(ensure_out(cfg));
  return m;
}

double cmd_map(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  if (cfg.checkpoint.empty()) throw ParamError("map needs --checkpoint");
  Model<float> model = load_model(cfg.checkpoint);
  const Scene scene = load_scene(cfg);
  std::optional<PcaModel> source_pca;
  if (!cfg.source_pca.empty()) source_pca = pca_from_checkpoint(load_checkpoint(cfg.source_pca));
  const PatchSet ps = align_labels(
      model, prepare(scene, model.patch_size(), model.bands(), {cfg.standardize}, source_pca ? &*source_pca : nullptr)
                 .patches);
  const auto pred = predict(model, ps, cfg.batch);

  GroundTruth predicted(scene.gt.width, scene.gt.height);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ps.count(); ++i) {
    const auto k = static_cast<std::size_t>(pred[i]);
    const std::uint16_t id = k < model.class_values.size() ? model.class_values[k] : static_cast<std::uint16_t>(k + 1);
    predicted.at(ps.coords[i].first, ps.coords[i].second) = id;
    correct += pred[i] == ps.labels[i];
  }
  const auto out = ensure_out(cfg);
  render_label_map(scene.gt, out / "groundtruth.ppm");
  render_label_map(predicted, out / "prediction.ppm");
  const double oa = static_cast<double>(correct) / static_cast<double>(ps.count());

  RunReport r;
  r.echo_config(cfg);
  r.set("phase", std::string("map"));
  r.set("map.width", scene.gt.width);
  r.set("map.height", scene.gt.height);
  r.set("map.labeled_pixels", ps.count());
  r.set("map.overall_accuracy", oa);
  r.write(out);
  return oa;
}

std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg) {
  apply_threads(cfg);
  const auto out = ensure_out(cfg);
  const Scene scene = load_scene(cfg);
  const PcaModel pca = pca_fit(scene.cube, cfg.bands, {cfg.standardize});
  const HyperCube reduced = pca_apply(pca, scene.cube);

  std::vector<BenchRow> rows;
  RunReport r;
  r.echo_config(cfg);
  r.set("phase", std::string("bench"));
  for (std::size_t s : cfg.sizes) {
    const PatchSet ps = extract_patches(reduced, scene.gt, s);
    const SplitIndices split = stratified_split(ps.labels, cfg.train_frac.value_or(0.3), cfg.seed);
    auto model = build_simple_model<float>(s, cfg.bands, ps.num_classes(), cfg.seed);
    TrainConfig tc;
    tc.batch = cfg.batch;
    tc.epochs = cfg.epochs.value_or(10);
    tc.lr = cfg.lr;
    tc.seed = cfg.seed;
    const auto t0 = std::chrono::steady_clock::now();
    train(model, ps, split, tc);
    const double secs = seconds_since(t0);
    const auto pred = predict(model, ps, std::span<const std::size_t>(split.test));
    const Metrics m = evaluate(pred, subset_labels(ps, split.test), ps.num_classes());
    rows.push_back({s, tc.epochs, cfg.bands, m.overall, secs});
    r.set("bench.accuracy." + std::to_string(s), m.overall);
    r.set("time.bench_seconds." + std::to_string(s), secs);
  }
  std::ostringstream csv;
  csv << "patch_size,epochs,bands,accuracy\n";
  for (const auto& row : rows) csv << row.patch_size << ',' << row.epochs << ',' << row.bands << ',' << fmt_double(row.accuracy) << '\n';
  r.add_table("bench.csv", csv.str());
  r.add_table("bench.txt", bench_table(rows));
  r.write(out);
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "# | Patch Size | epoch | Spectral band | Accuracy\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char acc[16];
    std::snprintf(acc, sizeof acc, "%.2f%%", 100.0 * rows[i].accuracy);
    os << i + 1 << " | " << rows[i].patch_size << " x " << rows[i].patch_size << " | " << rows[i].epochs << " | "
       << rows[i].bands << " | " << acc << '\n';
  }
  return os.str();
}

bool cmd_verify(const ExperimentConfig& cfg, std::vector<verify::CheckResult>* results) {
  apply_threads(cfg);
  std::vector<verify::CheckResult> all = verify::gradient_suite(10, cfg.seed);

  // A corrupted backward pass must be caught.
  auto mutant = verify::gradient_check("conv3d", 3, cfg.seed, 1e-3);
  verify::CheckResult sanity;
  sanity.name = "gradient check detects corrupted backward";
  sanity.pass = !mutant.pass;
  sanity.value = mutant.value;
  sanity.threshold = verify::kGradTolerance;
  sanity.detail = "corrupted conv3d gradients give relative error " + fmt_double(mutant.value);
  all.push_back(sanity);

  all.push_back(verify::pca_oracle_suite(20, cfg.seed));
  all.push_back(verify::param_count_check());
  all.push_back(verify::format_roundtrip_check(cfg.seed));
  all.push_back(verify::determinism_check(cfg.seed));

  bool ok = true;
  for (const auto& c : all) ok = ok && c.pass;
  if (results) *results = std::move(all);
  return ok;
}

}  // namespace hsi
