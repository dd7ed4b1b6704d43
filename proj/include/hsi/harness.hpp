#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsi/io.hpp"
#include "hsi/model.hpp"
#include "hsi/preprocess.hpp"
#include "hsi/synthetic.hpp"
#include "hsi/transfer.hpp"
#include "hsi/verify.hpp"

namespace hsi {

inline constexpr const char* kVersion = "hsitl 1.0.0";

/// Settings shared by every subcommand. Optional fields fall back to the
/// subcommand's own default (train: 10 epochs at 0.3; transfer: 3 epochs at 0.4).
struct ExperimentConfig {
  std::string cube, gt, archive, checkpoint, split, source_pca;
  std::string synthetic;  // "source" or "target": generate the stand-in scene instead of reading files
  std::string out = "out";
  std::string arch = "base";
  std::string subset = "test";
  std::size_t patch_size = 7;
  std::size_t bands = 15;
  std::optional<std::size_t> epochs;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::optional<double> train_frac;
  double dropout = 0.4;
  int threads = 0;  // 0 keeps the OpenMP default
  bool standardize = false;
  std::vector<std::size_t> sizes = {3, 5, 7};
};

/// Reads `key = value` lines; `#` starts a comment. Keys are flag names without dashes.
std::map<std::string, std::string> read_config_file(const fs::path& path);

/// Ordered key/value record of a run, plus CSV side tables.
/// Keys under "time." hold wall-clock measurements and are the only entries
/// allowed to differ between two runs with the same inputs and seed.
class RunReport {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::size_t value);
  void set(const std::string& key, bool value);
  void add_table(const std::string& file, std::string csv) { tables_.emplace_back(file, std::move(csv)); }
  void echo_config(const ExperimentConfig& cfg);
  void add_metrics(const std::string& prefix, const Metrics& m);

  const std::string* get(const std::string& key) const;
  std::string text(bool include_timings = true) const;
  void write(const fs::path& dir) const;

  static std::map<std::string, std::string> parse(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::pair<std::string, std::string>> tables_;
};

std::string history_csv(const History& h);
std::string confusion_csv(const Metrics& m, const std::vector<std::uint16_t>& class_values);

/// Model parameters at `path` plus the layer manifest at `path`.manifest.
void save_model(const Model<float>& model, const fs::path& path);
Model<float> load_model(const fs::path& path);

void write_split(const SplitIndices& split, const fs::path& path);
SplitIndices read_split(const fs::path& path);

struct Scene {
  HyperCube cube;
  GroundTruth gt;
};
Scene load_scene(const ExperimentConfig& cfg);

struct Prepared {
  PcaModel pca;
  PatchSet patches;
};
/// PCA to `bands`, then patches of `patch_size` (own PCA fit unless `pca` is given).
Prepared prepare(const Scene& scene, std::size_t patch_size, std::size_t bands, const PcaOptions& opts = {},
                 const PcaModel* pca = nullptr);

struct TrainOutcome {
  Model<float> model;
  History history;
  SplitIndices split;
  Metrics test;
  RunReport report;
};

struct TransferOutcome {
  Model<float> model;
  FineTuneResult result;
  Metrics test;
  bool stump_unchanged = false;
  RunReport report;
};

struct BenchRow {
  std::size_t patch_size;
  std::size_t epochs;
  std::size_t bands;
  double accuracy;
  double seconds;
};

// Subcommands. Each writes its artefacts and report.txt under cfg.out.
Prepared cmd_prepare(const ExperimentConfig& cfg);
TrainOutcome cmd_train(const ExperimentConfig& cfg);
TransferOutcome cmd_transfer(const ExperimentConfig& cfg);
Metrics cmd_eval(const ExperimentConfig& cfg);
/// Writes groundtruth.ppm and prediction.ppm; returns accuracy over labeled pixels.
double cmd_map(const ExperimentConfig& cfg);
std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg);
std::string bench_table(const std::vector<BenchRow>& rows);
/// Runs every verification suite; true when all pass.
bool cmd_verify(const ExperimentConfig& cfg, std::vector<verify::CheckResult>* results = nullptr);

/// Byte image of the named parameters, for freeze checks.
std::vector<std::uint8_t> parameter_bytes(const Model<float>& model, std::size_t layer_count);

}  // namespace hsi
