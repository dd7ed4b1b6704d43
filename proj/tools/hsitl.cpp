#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "hsi/harness.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4, kVerify = 5 };

int exit_code(hsi::ErrorKind k) {
  switch (k) {
    case hsi::ErrorKind::config: return kConfig;
    case hsi::ErrorKind::data: return kData;
    case hsi::ErrorKind::numeric: return kNumeric;
  }
  return 1;
}

// Turns `key = value` lines into `--key=value` arguments placed ahead of the
// real ones, so flags given on the command line win (last value is kept).
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> pre;
  for (auto [key, value] : hsi::read_config_file(path)) {
    if (key == "config") throw hsi::ParamError("config files cannot include other config files");
    if (key == "sizes") std::replace(value.begin(), value.end(), ' ', ',');
    pre.push_back("--" + key + "=" + value);
  }
  // Options live on the top-level app; put file values before the subcommand.
  args.insert(args.begin(), pre.begin(), pre.end());
  return args;
}

void print_metrics(const char* what, const hsi::Metrics& m) {
  std::printf("%s: OA %.4f  AA %.4f  kappa %.4f\n", what, m.overall, m.average, m.kappa);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral 3D-CNN classification with transfer learning"};
  app.set_version_flag("--version", std::string(hsi::kVersion));
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  hsi::ExperimentConfig cfg;
  std::string config_path;
  std::size_t epochs = 0;
  double train_frac = 0;

  app.add_option("--config", config_path, "key = value file; command-line flags override it");
  app.add_option("--cube", cfg.cube, "hyperspectral cube (.hsc or .npy)");
  app.add_option("--gt", cfg.gt, "ground-truth labels (.hsg or .npy)");
  app.add_option("--archive", cfg.archive, "patch archive written by prepare");
  app.add_option("--checkpoint", cfg.checkpoint, "model checkpoint (.hstl with .manifest sidecar)");
  app.add_option("--split", cfg.split, "split file written by train/transfer");
  app.add_option("--subset", cfg.subset, "split subset to evaluate")->check(CLI::IsMember({"train", "test", "all"}));
  app.add_option("--source-pca", cfg.source_pca, "reuse a PCA model written by prepare");
  app.add_option("--synthetic", cfg.synthetic, "use a generated scene instead of files")
      ->check(CLI::IsMember({"source", "target"}));
  app.add_option("--arch", cfg.arch, "model for train")->check(CLI::IsMember({"base", "simple"}));
  app.add_option("--patch-size", cfg.patch_size, "patch side S (odd)")->capture_default_str();
  app.add_option("--bands", cfg.bands, "PCA components B")->capture_default_str()->check(CLI::PositiveNumber);
  auto* ep = app.add_option("--epochs", epochs, "training epochs (train 10, transfer 3)");
  app.add_option("--batch", cfg.batch, "mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  auto* tf = app.add_option("--train-frac", train_frac, "training fraction (train 0.3, transfer 0.4)")
                 ->check(CLI::Range(0.0, 1.0));
  app.add_option("--dropout", cfg.dropout, "head dropout rate for transfer")->capture_default_str()
      ->check(CLI::Range(0.0, 0.999));
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  app.add_option("--threads", cfg.threads, "OpenMP threads (1 = bit-deterministic)")->check(CLI::NonNegativeNumber);
  app.add_flag("--standardize", cfg.standardize, "scale bands to unit variance before PCA");
  app.add_option("--sizes", cfg.sizes, "patch sizes for bench")->delimiter(',');

  auto* prepare = app.add_subcommand("prepare", "PCA + patch extraction into a patch archive");
  auto* train = app.add_subcommand("train", "train the base (or simple) model");
  auto* transfer = app.add_subcommand("transfer", "freeze a trained stump and fine-tune a new head");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on an archive or scene");
  auto* map = app.add_subcommand("map", "render ground-truth and prediction maps as PPM");
  auto* bench = app.add_subcommand("bench", "simple-model accuracy for several patch sizes");
  auto* verify = app.add_subcommand("verify", "gradient, PCA, count, format and determinism checks");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  } catch (const hsi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  if (ep->count()) cfg.epochs = epochs;
  if (tf->count()) cfg.train_frac = train_frac;

  try {
    if (prepare->parsed()) {
      const auto p = hsi::cmd_prepare(cfg);
      std::printf("%zu patches of %zux%zux%zu, %zu classes -> %s\n", p.patches.count(), p.patches.size,
                  p.patches.size, p.patches.bands, p.patches.num_classes(), cfg.out.c_str());
    } else if (train->parsed()) {
      const auto o = hsi::cmd_train(cfg);
      for (std::size_t e = 0; e < o.history.size(); ++e)
        std::printf("epoch %zu: loss %.4f  acc %.4f  (%.1f s)\n", e + 1, o.history[e].loss, o.history[e].accuracy,
                    o.history[e].seconds);
      std::printf("parameters: %zu\n", o.model.param_count());
      print_metrics("test", o.test);
    } else if (transfer->parsed()) {
      const auto o = hsi::cmd_transfer(cfg);
      for (std::size_t e = 0; e < o.result.history.size(); ++e)
        std::printf("epoch %zu: loss %.4f  acc %.4f  (%.1f s)\n", e + 1, o.result.history[e].loss,
                    o.result.history[e].accuracy, o.result.history[e].seconds);
      std::printf("stump unchanged: %s\n", o.stump_unchanged ? "yes" : "NO");
      if (const auto* r = o.report.get("time.speed_ratio"))
        std::printf("fine-tune / base time per sample-epoch: %s\n", r->c_str());
      print_metrics("test", o.test);
    } else if (eval->parsed()) {
      print_metrics("eval", hsi::cmd_eval(cfg));
    } else if (map->parsed()) {
      std::printf("labeled-pixel accuracy %.4f; maps in %s\n", hsi::cmd_map(cfg), cfg.out.c_str());
    } else if (bench->parsed()) {
      std::fputs(hsi::bench_table(hsi::cmd_bench(cfg)).c_str(), stdout);
    } else if (verify->parsed()) {
      std::vector<hsi::verify::CheckResult> results;
      const bool ok = hsi::cmd_verify(cfg, &results);
      for (const auto& r : results)
        std::printf("[%s] %s: %.3g (bound %.3g) %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                    r.threshold, r.detail.c_str());
      std::printf("%s\n", ok ? "all checks passed" : "verification FAILED");
      return ok ? kOk : kVerify;
    }
  } catch (const hsi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
