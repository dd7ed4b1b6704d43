#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "hsi/harness.hpp"
#include "hsi/kernels.hpp"

using namespace hsi;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hsitl_h_" + std::to_string(Rng(std::random_device{}()).next()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  const auto b = read_file(p);
  return std::string(b.begin(), b.end());
}

// Small four-class scene written to disk.
ExperimentConfig small_scene(const fs::path& dir) {
  SyntheticParams p;
  p.width = 32;
  p.height = 32;
  p.bands = 20;
  p.block = 8;
  p.class_ids = {1, 2, 3, 4};
  p.noise = 0.3;
  const auto sc = generate_scene(p);
  write_cube(sc.cube, dir / "cube.hsc");
  write_ground_truth(sc.gt, dir / "gt.hsg");
  ExperimentConfig cfg;
  cfg.cube = (dir / "cube.hsc").string();
  cfg.gt = (dir / "gt.hsg").string();
  cfg.bands = 8;
  cfg.batch = 32;
  cfg.epochs = 3;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("prepare on a 9x9 scene with one labelled centre") {
  TempDir dir;
  HyperCube cube(9, 9, 4);
  Rng rng(1);
  for (auto& v : cube.values.data()) v = static_cast<float>(rng.normal());
  GroundTruth gt(9, 9);
  gt.at(4, 4) = 3;
  write_cube(cube, dir.path / "c.hsc");
  write_ground_truth(gt, dir.path / "g.hsg");
  ExperimentConfig cfg;
  cfg.cube = (dir.path / "c.hsc").string();
  cfg.gt = (dir.path / "g.hsg").string();
  cfg.patch_size = 9;
  cfg.bands = 2;
  cfg.out = (dir.path / "out").string();
  const auto p = cmd_prepare(cfg);
  CHECK(p.patches.count() == 1);
  const auto archived = read_patch_archive(dir.path / "out" / "patches.hsp");
  CHECK(archived == p.patches);
  CHECK(archived.coords[0] == std::pair<std::uint32_t, std::uint32_t>{4, 4});
  CHECK(fs::exists(dir.path / "out" / "pca.hstl"));
  const auto kv = RunReport::parse(slurp(dir.path / "out" / "report.txt"));
  CHECK(kv.at("data.patches") == "1");
  CHECK(kv.at("version") == kVersion);
}

TEST_CASE("mismatched scene dimensions are a data error") {
  TempDir dir;
  write_cube(HyperCube(4, 4, 3), dir.path / "c.hsc");
  write_ground_truth(GroundTruth(4, 5, 1), dir.path / "g.hsg");
  ExperimentConfig cfg;
  cfg.cube = (dir.path / "c.hsc").string();
  cfg.gt = (dir.path / "g.hsg").string();
  CHECK_THROWS_AS(load_scene(cfg), DataError);
  cfg.gt.clear();
  CHECK_THROWS_AS(load_scene(cfg), ParamError);
}

TEST_CASE("config file parsing") {
  TempDir dir;
  std::ofstream(dir.path / "a.cfg") << "# comment\n  bands = 15  \n\nseed=3 # trailing\n";
  const auto kv = read_config_file(dir.path / "a.cfg");
  CHECK(kv.size() == 2);
  CHECK(kv.at("bands") == "15");
  CHECK(kv.at("seed") == "3");
  std::ofstream(dir.path / "b.cfg") << "bands\n";
  CHECK_THROWS_AS(read_config_file(dir.path / "b.cfg"), ParamError);
  CHECK_THROWS_AS(read_config_file(dir.path / "missing.cfg"), ParamError);
}

TEST_CASE("report text and parse") {
  RunReport r;
  r.set("a", std::string("x"));
  r.set("b", 0.1);
  r.set("time.t", 2.5);
  r.set("a", std::string("y"));
  CHECK(r.text(false) == "a = y\nb = 0.1\n");
  const auto kv = RunReport::parse(r.text());
  CHECK(kv.at("time.t") == "2.5");
  CHECK(std::stod(kv.at("b")) == 0.1);
}

TEST_CASE("split files round-trip") {
  TempDir dir;
  SplitIndices s{{0, 4, 9}, {1, 2, 3}, 77};
  write_split(s, dir.path / "s.txt");
  const auto r = read_split(dir.path / "s.txt");
  CHECK(r.train == s.train);
  CHECK(r.test == s.test);
  CHECK(r.seed == 77);
}

TEST_CASE("train, eval and map pipeline with reproducible reports") {
  TempDir dir;
  auto cfg = small_scene(dir.path);
  cfg.patch_size = 7;
  cfg.out = (dir.path / "a").string();
  const auto a = cmd_train(cfg);
  cfg.out = (dir.path / "b").string();
  const auto b = cmd_train(cfg);

  CHECK(a.report.text(false) == b.report.text(false));
  CHECK(read_file(dir.path / "a" / "model.hstl") == read_file(dir.path / "b" / "model.hstl"));
  CHECK(slurp(dir.path / "a" / "history.csv") == slurp(dir.path / "b" / "history.csv"));
  CHECK(slurp(dir.path / "a" / "confusion.csv") == slurp(dir.path / "b" / "confusion.csv"));
  CHECK(a.report.get("time.seconds_per_sample_epoch"));
  CHECK(*a.report.get("model.parameters") == std::to_string(a.model.param_count()));

  // Saved model evaluates to the same test metrics.
  ExperimentConfig ev = cfg;
  ev.checkpoint = (dir.path / "a" / "model.hstl").string();
  ev.split = (dir.path / "a" / "split.txt").string();
  ev.out = (dir.path / "ev").string();
  const auto m = cmd_eval(ev);
  CHECK(m.overall == a.test.overall);
  CHECK(m.confusion == a.test.confusion);

  ev.out = (dir.path / "map").string();
  const double oa = cmd_map(ev);
  CHECK(oa > 0.0);
  const auto img = read_file(dir.path / "map" / "prediction.ppm");
  const std::string header = "P6\n32 32\n255\n";
  CHECK(std::string(img.begin(), img.begin() + static_cast<long>(header.size())) == header);
  CHECK(img.size() == header.size() + 32 * 32 * 3);
  // Unlabelled pixels stay black.
  const auto gt = read_ground_truth(cfg.gt);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      if (gt.at(x, y) == 0) {
        const std::size_t o = header.size() + (y * 32 + x) * 3;
        CHECK((img[o] | img[o + 1] | img[o + 2]) == 0);
      }
}

TEST_CASE("eval on the training split of an overfit model") {
  TempDir dir;
  auto cfg = small_scene(dir.path);
  cfg.patch_size = 3;
  cfg.arch = "simple";
  cfg.epochs = 40;
  cfg.lr = 5e-3;
  cfg.train_frac = 0.2;
  cfg.out = (dir.path / "t").string();
  cmd_train(cfg);
  ExperimentConfig ev = cfg;
  ev.checkpoint = (dir.path / "t" / "model.hstl").string();
  ev.split = (dir.path / "t" / "split.txt").string();
  ev.subset = "train";
  ev.out = (dir.path / "e").string();
  CHECK(cmd_eval(ev).overall == 1.0);
}

TEST_CASE("transfer writes the freeze flag and timing ratio") {
  TempDir dir;
  auto cfg = small_scene(dir.path);
  cfg.out = (dir.path / "base").string();
  cmd_train(cfg);
  ExperimentConfig tc = cfg;
  tc.checkpoint = (dir.path / "base" / "model.hstl").string();
  tc.epochs.reset();
  tc.out = (dir.path / "tr").string();
  const auto o = cmd_transfer(tc);
  CHECK(o.stump_unchanged);
  CHECK(o.result.history.size() == 3);
  CHECK(*o.report.get("freeze.stump_unchanged") == "true");
  CHECK(*o.report.get("model.stump_parameters") == "17552");
  CHECK(o.report.get("time.speed_ratio"));
  const auto loaded = load_model(dir.path / "tr" / "model.hstl");
  CHECK(loaded.to_checkpoint() == o.model.to_checkpoint());
}

TEST_CASE("bench table layout") {
  const std::vector<BenchRow> rows = {{3, 10, 15, 0.8716, 1.0}, {5, 10, 15, 0.9, 1.0}};
  CHECK(bench_table(rows) ==
        "# | Patch Size | epoch | Spectral band | Accuracy\n"
        "1 | 3 x 3 | 10 | 15 | 87.16%\n"
        "2 | 5 x 5 | 10 | 15 | 90.00%\n");
}
