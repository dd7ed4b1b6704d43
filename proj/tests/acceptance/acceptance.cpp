// One line per acceptance criterion. Real scenes are used when HSITL_DATA
// points at a directory holding salinas.npy, salinas_gt.npy, salinas_a.npy and
// salinas_a_gt.npy; otherwise the synthetic stand-ins are used with the
// relaxed thresholds.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "hsi/harness.hpp"

using namespace hsi;

namespace {

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double timed(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Datasets {
  fs::path source_cube, source_gt, target_cube, target_gt;
};

std::optional<Datasets> real_datasets() {
  const char* dir = std::getenv("HSITL_DATA");
  if (!dir) return std::nullopt;
  Datasets d{fs::path(dir) / "salinas.npy", fs::path(dir) / "salinas_gt.npy", fs::path(dir) / "salinas_a.npy",
             fs::path(dir) / "salinas_a_gt.npy"};
  for (const auto& p : {d.source_cube, d.source_gt, d.target_cube, d.target_gt})
    if (!fs::exists(p)) return std::nullopt;
  return d;
}

ExperimentConfig scene_config(const std::optional<Datasets>& real, bool target, const fs::path& out) {
  ExperimentConfig cfg;
  if (real) {
    cfg.cube = (target ? real->target_cube : real->source_cube).string();
    cfg.gt = (target ? real->target_gt : real->source_gt).string();
  } else {
    cfg.synthetic = target ? "target" : "source";
  }
  cfg.out = out.string();
  return cfg;
}

template <typename F>
void guarded(int n, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  const auto real = real_datasets();
  const fs::path work = fs::temp_directory_path() / ("hsitl_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(work);
  std::printf("data: %s\n", real ? "public scenes from HSITL_DATA" : "synthetic stand-ins (public scenes absent)");

  guarded(1, [] {
    verify::CheckResult r;
    const double s = timed([&] { r = verify::param_count_check(); });
    report(1, r.pass && s < 1.0, r.detail + fmt(" (%.3f s)", s));
  });

  guarded(2, [] {
    std::vector<verify::CheckResult> rs;
    const double s = timed([&] { rs = verify::gradient_suite(10, 2021); });
    bool ok = s < 60.0;
    double worst = 0;
    std::string kinds;
    for (const auto& r : rs) {
      ok = ok && r.pass;
      worst = std::max(worst, r.value);
      kinds += (kinds.empty() ? "" : ",") + r.name.substr(r.name.find(' ') + 1);
    }
    report(2, ok && rs.size() == 6, fmt("max relative error %.2e < 1e-5 over ", worst) + kinds + fmt(" (%.2f s)", s));
  });

  guarded(3, [] {
    verify::CheckResult r;
    const double s = timed([&] { r = verify::pca_oracle_suite(20, 2021); });
    report(3, r.pass && s < 10.0, fmt("max deviation %.2e <= 1e-8 on 20 cubes (%.2f s)", r.value, s));
  });

  guarded(4, [&] {
    bool ok = true;
    std::string detail;
    for (bool target : {false, true}) {
      const Scene sc = load_scene(scene_config(std::nullopt, target, work));
      const auto ps = prepare(sc, 7, 15).patches;
      ok = ok && ps.count() == sc.gt.labeled_count();
      detail += std::string("synthetic ") + (target ? "target" : "source") + " N=" + std::to_string(ps.count()) +
                " labeled=" + std::to_string(sc.gt.labeled_count()) + "; ";
    }
    if (real) {
      const auto s = prepare(load_scene(scene_config(real, false, work)), 7, 15).patches;
      const auto t = prepare(load_scene(scene_config(real, true, work)), 7, 15).patches;
      ok = ok && s.count() == 54129 && t.count() == 5348 && t.num_classes() == 6;
      detail += fmt("public N=%.0f (54129), N=%.0f (5348)", static_cast<double>(s.count()),
                    static_cast<double>(t.count()));
    } else {
      detail += "public-scene counts 54129/5348 not run (datasets absent)";
    }
    report(4, ok, detail);
  });

  // The base run feeds the transfer criteria 6-8.
  std::optional<TrainOutcome> base;
  double base_seconds = 0;
  guarded(5, [&] {
    ExperimentConfig cfg = scene_config(real, false, work / "base");
    cfg.patch_size = 7;
    cfg.bands = 15;
    cfg.epochs = 10;
    cfg.train_frac = 0.3;
    cfg.batch = 256;
    base_seconds = timed([&] { base = cmd_train(cfg); });
    const double bar = real ? 0.95 : 0.90;
    report(5, base->test.overall >= bar && base_seconds <= 600.0,
           fmt("test OA %.4f >= %.2f, 10 epochs in %.1f s (budget 600 s)", base->test.overall, bar, base_seconds));
  });

  std::optional<TransferOutcome> tr;
  guarded(6, [&] {
    if (!base) throw std::runtime_error("base model unavailable");
    ExperimentConfig cfg = scene_config(real, true, work / "transfer");
    cfg.checkpoint = (work / "base" / "model.hstl").string();
    cfg.dropout = 0.4;
    cfg.train_frac = 0.4;
    cfg.epochs = 3;
    const double s = timed([&] { tr = cmd_transfer(cfg); });
    const double bar = real ? 0.97 : 0.90;
    report(6, tr->test.overall >= bar && s <= 300.0,
           fmt("test OA %.4f >= %.2f, 40:60 split, 3 epochs, dropout 0.4 (%.1f s incl. scene prep)", tr->test.overall,
               bar, s));
  });

  guarded(7, [&] {
    if (!tr) throw std::runtime_error("transfer run unavailable");
    const auto* ratio = tr->report.get("time.speed_ratio");
    if (!ratio) throw std::runtime_error("transfer report lacks time.speed_ratio");
    const double r = std::stod(*ratio);
    report(7, r <= 0.5,
           fmt("fine-tune/base wall-clock per sample-epoch = %.3f <= 0.5", r) + " (base " +
               *tr->report.get("time.base_seconds_per_sample_epoch") + " s, fine-tune " +
               *tr->report.get("time.seconds_per_sample_epoch") + " s)");
  });

  guarded(8, [&] {
    if (!tr) throw std::runtime_error("transfer run unavailable");
    report(8, tr->stump_unchanged && *tr->report.get("freeze.stump_unchanged") == "true",
           "stump parameter bytes identical before and after fine-tuning");
  });

  guarded(9, [&] {
    ExperimentConfig cfg = scene_config(real, false, work / "bench");
    cfg.bands = 15;
    cfg.epochs = 10;
    cfg.sizes = {3, 5, 7};
    std::vector<BenchRow> rows;
    const double s = timed([&] { rows = cmd_bench(cfg); });
    bool ok = rows.size() == 3 && rows[0].accuracy < rows[1].accuracy && rows[1].accuracy < rows[2].accuracy &&
              s <= 1200.0;
    if (real) {
      const double reference[3] = {0.84, 0.89, 0.93};
      for (int i = 0; i < 3; ++i) ok = ok && std::abs(rows[static_cast<std::size_t>(i)].accuracy - reference[i]) <= 0.05;
    }
    report(9, ok,
           fmt("OA(3)=%.4f < OA(5)=%.4f < OA(7)=%.4f (%.1f s)", rows.at(0).accuracy, rows.at(1).accuracy,
               rows.at(2).accuracy, s) +
               (real ? "; each within 5 points of 84/89/93" : "; ordering only on synthetic data"));
  });

  guarded(10, [&] {
    const auto self = verify::determinism_check(7);
    SyntheticParams p = synthetic_source_params();
    p.width = p.height = 48;
    const auto sc = generate_scene(p);
    write_cube(sc.cube, work / "det_cube.hsc");
    write_ground_truth(sc.gt, work / "det_gt.hsg");
    auto run = [&](const char* name) {
      ExperimentConfig cfg;
      cfg.cube = (work / "det_cube.hsc").string();
      cfg.gt = (work / "det_gt.hsg").string();
      cfg.epochs = 2;
      cfg.batch = 64;
      cfg.threads = 1;
      cfg.out = (work / name).string();
      return cmd_train(cfg).report.text(false);
    };
    const auto ra = run("det_a"), rb = run("det_b");
    const bool same = read_file(work / "det_a" / "model.hstl") == read_file(work / "det_b" / "model.hstl") &&
                      read_file(work / "det_a" / "history.csv") == read_file(work / "det_b" / "history.csv") &&
                      ra == rb;
    report(10, self.pass && same, "two --threads 1 runs: checkpoints, histories and reports bit-identical");
  });

  guarded(11, [] {
    verify::CheckResult r;
    const double s = timed([&] { r = verify::format_roundtrip_check(11, 20); });
    report(11, r.pass && s < 10.0, "cube, ground truth, patch archive, checkpoint: " + r.detail + fmt(" (%.2f s)", s));
  });

  fs::remove_all(work);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
