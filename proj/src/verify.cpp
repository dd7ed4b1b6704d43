#include "hsi/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>

#include "hsi/io.hpp"
#include "hsi/kernels.hpp"
#include "hsi/model.hpp"
#include "hsi/nn.hpp"
#include "hsi/rng.hpp"
#include "hsi/synthetic.hpp"

namespace hsi::verify {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

Tensor<double> conv3d_reference(const Tensor<double>& in, const Tensor<double>& kernels, const Tensor<double>& bias) {
  const std::size_t n = in.extent(0), c_in = in.extent(1);
  const std::size_t k_out = kernels.extent(0), k1 = kernels.extent(1), k2 = kernels.extent(2), k3 = kernels.extent(3);
  const std::size_t o1 = in.extent(2) - k1 + 1, o2 = in.extent(3) - k2 + 1, o3 = in.extent(4) - k3 + 1;
  Tensor<double> out({n, k_out, o1, o2, o3});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < k_out; ++o)
      for (std::size_t x = 0; x < o1; ++x)
        for (std::size_t y = 0; y < o2; ++y)
          for (std::size_t z = 0; z < o3; ++z) {
            double acc = bias.at(o);
            for (std::size_t c = 0; c < c_in; ++c)
              for (std::size_t i = 0; i < k1; ++i)
                for (std::size_t j = 0; j < k2; ++j)
                  for (std::size_t l = 0; l < k3; ++l)
                    acc += kernels.at(o, i, j, l, c) * in.at(b, c, x + i, y + j, z + l);
            out.at(b, o, x, y, z) = acc;
          }
  return out;
}

// ---- gradient checks ----------------------------------------------------------

namespace {

void fill_normal(Tensor<double>& t, Rng& rng, double scale = 1.0) {
  for (auto& v : t.data()) v = scale * rng.normal();
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

struct Tally {
  double worst = 0;
  std::size_t entries = 0;
  void add(double analytic, double numeric) {
    worst = std::max(worst, relative_error(analytic, numeric));
    ++entries;
  }
};

// Checks d/dθ sum(g ⊙ layer(x)) for the input and every parameter.
void check_layer(nn::Layer<double>& layer, Tensor<double> x, Rng& rng, double perturb, Tally& tally) {
  Tensor<double> y = layer.forward(x, nn::Mode::train);
  Tensor<double> g(y.shape());
  fill_normal(g, rng);
  const Tensor<double> grad_in = layer.backward(g, true);
  std::vector<Tensor<double>> grads;
  for (auto& p : layer.params()) grads.push_back(*p.grad);

  auto objective = [&](const Tensor<double>& input) {
    const Tensor<double> out = layer.forward(input, nn::Mode::train);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += g[i] * out[i];
    return s;
  };
  auto corrupt = [&](double a) { return a + perturb * (1.0 + std::abs(a)); };

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kFdStep;
    const double up = objective(x);
    x[i] = keep - kFdStep;
    const double down = objective(x);
    x[i] = keep;
    tally.add(corrupt(grad_in[i]), (up - down) / (2 * kFdStep));
  }
  auto params = layer.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<double>& v = *params[k].value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + kFdStep;
      const double up = objective(x);
      v[i] = keep - kFdStep;
      const double down = objective(x);
      v[i] = keep;
      tally.add(corrupt(grads[k][i]), (up - down) / (2 * kFdStep));
    }
  }
}

}  // namespace

CheckResult gradient_check(const std::string& kind, int instances, std::uint64_t seed, double perturb) {
  Rng rng = Rng::derive(seed, "gradcheck/" + kind);
  Tally tally;
  for (int inst = 0; inst < instances; ++inst) {
    if (kind == "conv3d") {
      const std::size_t cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
      const std::size_t k1 = pick(rng, 1, 3), k2 = pick(rng, 1, 3), k3 = pick(rng, 1, 3);
      nn::Conv3D<double> layer(cin, cout, k1, k2, k3);
      fill_normal(layer.kernels, rng, 0.5);
      fill_normal(layer.bias, rng, 0.5);
      Tensor<double> x({2, cin, k1 + pick(rng, 0, 2), k2 + pick(rng, 0, 2), k3 + pick(rng, 0, 2)});
      fill_normal(x, rng);
      check_layer(layer, x, rng, perturb, tally);
    } else if (kind == "dense") {
      const std::size_t nin = pick(rng, 1, 8), nout = pick(rng, 1, 8);
      nn::Dense<double> layer(nin, nout);
      fill_normal(layer.weights, rng, 0.5);
      fill_normal(layer.bias, rng, 0.5);
      Tensor<double> x({3, nin});
      fill_normal(x, rng);
      check_layer(layer, x, rng, perturb, tally);
    } else if (kind == "relu") {
      nn::ReLU<double> layer;
      Tensor<double> x({3, pick(rng, 1, 9)});
      // Keep samples away from the kink so central differences stay one-sided-free.
      for (auto& v : x.data()) {
        do v = rng.normal();
        while (std::abs(v) < 0.1);
      }
      check_layer(layer, x, rng, perturb, tally);
    } else if (kind == "flatten") {
      nn::Flatten<double> layer;
      Tensor<double> x({2, pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)});
      fill_normal(x, rng);
      check_layer(layer, x, rng, perturb, tally);
    } else if (kind == "dropout") {
      nn::Dropout<double> layer(0.4, rng.next());
      Tensor<double> x({3, pick(rng, 2, 9)});
      fill_normal(x, rng);
      layer.forward(x, nn::Mode::train);
      layer.hold_mask(true);
      check_layer(layer, x, rng, perturb, tally);
    } else if (kind == "softmax_xent") {
      const std::size_t n = pick(rng, 1, 4), k = pick(rng, 2, 6);
      Tensor<double> z({n, k});
      fill_normal(z, rng, 2.0);
      std::vector<int> t(n);
      for (auto& v : t) v = static_cast<int>(rng.below(k));
      const auto res = nn::softmax_xent<double>(z, t);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double keep = z[i];
        z[i] = keep + kFdStep;
        const double up = nn::softmax_xent<double>(z, t).loss;
        z[i] = keep - kFdStep;
        const double down = nn::softmax_xent<double>(z, t).loss;
        z[i] = keep;
        tally.add(res.grad[i] + perturb * (1.0 + std::abs(res.grad[i])), (up - down) / (2 * kFdStep));
      }
    } else {
      throw ParamError("unknown layer kind for gradient check: " + kind);
    }
  }
  CheckResult r;
  r.name = "gradient " + kind;
  r.value = tally.worst;
  r.threshold = kGradTolerance;
  r.pass = tally.worst < kGradTolerance;
  r.detail = std::to_string(instances) + " instances, " + std::to_string(tally.entries) + " entries";
  return r;
}

std::vector<CheckResult> gradient_suite(int instances, std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (const char* k : {"conv3d", "dense", "relu", "flatten", "dropout", "softmax_xent"})
    out.push_back(gradient_check(k, instances, seed));
  return out;
}

// ---- PCA oracle ---------------------------------------------------------------

PcaOracle pca_reference(const HyperCube& cube, std::size_t bands) {
  const std::size_t n = cube.pixels(), r = cube.bands;
  Eigen::MatrixXd x(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < r; ++b) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = cube.values[i * r + b];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);

  PcaOracle o;
  o.vectors = Tensor<double>({r, r});
  // Eigen returns ascending eigenvalues.
  for (std::size_t k = 0; k < r; ++k) {
    const auto src = static_cast<Eigen::Index>(r - 1 - k);
    o.eigenvalues.push_back(es.eigenvalues()(src));
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index lead;
    v.cwiseAbs().maxCoeff(&lead);
    if (v(lead) < 0) v = -v;
    for (std::size_t i = 0; i < r; ++i) o.vectors.at(i, k) = v(static_cast<Eigen::Index>(i));
  }
  o.projection = Tensor<double>({cube.width, cube.height, bands});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < bands; ++c) {
      double acc = 0;
      for (std::size_t b = 0; b < r; ++b)
        acc += o.vectors.at(b, c) * centred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
      o.projection[i * bands + c] = acc;
    }
  return o;
}

CheckResult pca_oracle_suite(int cubes, std::uint64_t seed, double tolerance) {
  Rng rng = Rng::derive(seed, "pca-oracle");
  double worst = 0;
  for (int c = 0; c < cubes; ++c) {
    const std::size_t w = pick(rng, 3, 8), h = pick(rng, 3, 8), r = pick(rng, 2, 12);
    HyperCube cube(w, h, r);
    // Correlated bands with a spread of variances, like real spectra.
    std::vector<double> mix(r * r);
    for (auto& m : mix) m = rng.normal();
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
      std::vector<double> z(r);
      for (std::size_t b = 0; b < r; ++b) z[b] = rng.normal() * std::pow(0.7, static_cast<double>(b));
      for (std::size_t b = 0; b < r; ++b) {
        double acc = 3.0;
        for (std::size_t k = 0; k < r; ++k) acc += mix[b * r + k] * z[k];
        cube.values[i * r + b] = static_cast<float>(acc);
      }
    }
    const std::size_t bands = pick(rng, 1, r);
    const PcaModel m = pca_fit(cube, bands);
    const PcaOracle o = pca_reference(cube, bands);
    for (std::size_t k = 0; k < bands; ++k) worst = std::max(worst, std::abs(m.eigenvalues[k] - o.eigenvalues[k]));
    worst = std::max(worst, max_abs_diff(pca_transform(m, cube), o.projection));
  }
  CheckResult res;
  res.name = "pca oracle";
  res.value = worst;
  res.threshold = tolerance;
  res.pass = worst < tolerance;
  res.detail = std::to_string(cubes) + " random cubes";
  return res;
}

// ---- structural checks ----------------------------------------------------------

CheckResult param_count_check() {
  const auto m = build_base_model<float>(7, 15, 16, 1);
  const auto parts = m.layer_param_counts();
  std::ostringstream os;
  for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? " + " : "") << parts[i];
  const std::size_t total = m.param_count();
  os << " = " << total;
  const std::vector<std::size_t> expected = {224, 3472, 13856, 73984, 32896, 2064};
  CheckResult r;
  r.name = "base parameter count";
  r.value = static_cast<double>(total);
  r.threshold = 126496;
  r.pass = total == 126496 && parts == expected;
  r.detail = os.str();
  return r;
}

CheckResult format_roundtrip_check(std::uint64_t seed, int instances) {
  Rng rng = Rng::derive(seed, "roundtrip");
  const fs::path dir = fs::temp_directory_path() / ("hsitl-roundtrip-" + std::to_string(rng.next()));
  fs::create_directories(dir);
  int failures = 0;
  std::string what;
  auto expect = [&](bool ok, const char* name) {
    if (!ok) {
      ++failures;
      what += std::string(what.empty() ? "" : ", ") + name;
    }
  };
  for (int i = 0; i < instances; ++i) {
    HyperCube cube(pick(rng, 1, 6), pick(rng, 1, 6), pick(rng, 1, 6));
    for (auto& v : cube.values.data()) v = static_cast<float>(rng.normal() * 1e3);
    write_cube(cube, dir / "c.hsc");
    expect(read_cube(dir / "c.hsc") == cube && read_file(dir / "c.hsc") == encode_cube(cube), "cube");

    GroundTruth gt(cube.width, cube.height);
    for (auto& v : gt.labels) v = static_cast<std::uint16_t>(rng.below(4));
    gt.labels[0] = 1;
    write_ground_truth(gt, dir / "g.hsg");
    expect(read_ground_truth(dir / "g.hsg") == gt, "ground truth");

    const std::size_t s = 2 * pick(rng, 0, 2) + 1;
    const PatchSet ps = extract_patches(cube, gt, s);
    write_patch_archive(ps, dir / "p.hsp");
    expect(read_patch_archive(dir / "p.hsp") == ps, "patch archive");

    Checkpoint ck;
    for (std::size_t e = 0, n = pick(rng, 0, 4); e < n; ++e) {
      Shape shape(pick(rng, 1, 3));
      for (auto& x : shape) x = pick(rng, 1, 4);
      Tensor<float> t(shape);
      for (auto& v : t.data()) v = static_cast<float>(rng.normal());
      ck.add("t" + std::to_string(e), std::move(t));
    }
    save_checkpoint(ck, dir / "m.hstl");
    const Checkpoint back = load_checkpoint(dir / "m.hstl");
    expect(back == ck && encode_checkpoint(back) == encode_checkpoint(ck), "checkpoint");
  }
  fs::remove_all(dir);
  CheckResult r;
  r.name = "format round-trips";
  r.value = failures;
  r.threshold = 0;
  r.pass = failures == 0;
  r.detail = failures ? "mismatch: " + what : std::to_string(instances) + " random instances per format";
  return r;
}

CheckResult determinism_check(std::uint64_t seed) {
  SyntheticParams p;
  p.width = 24;
  p.height = 24;
  p.bands = 16;
  p.block = 6;
  p.class_ids = {1, 2, 3, 4};
  p.seed = seed;
  const auto scene = generate_scene(p);
  const PatchSet ps = extract_patches(pca_apply(pca_fit(scene.cube, 8), scene.cube), scene.gt, 7);
  const SplitIndices split = stratified_split(ps.labels, 0.3, seed);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 32;
  tc.seed = seed;

  const int threads = kernels::threads();
  kernels::set_threads(1);
  auto run = [&] {
    auto m = build_base_model<float>(7, 8, ps.num_classes(), seed);
    const History h = train(m, ps, split, tc);
    return std::make_pair(encode_checkpoint(m.to_checkpoint()), h);
  };
  const auto a = run();
  const auto b = run();
  kernels::set_threads(threads);

  bool same_history = a.second.size() == b.second.size();
  for (std::size_t e = 0; same_history && e < a.second.size(); ++e)
    same_history = a.second[e].loss == b.second[e].loss && a.second[e].accuracy == b.second[e].accuracy;
  CheckResult r;
  r.name = "determinism";
  r.pass = same_history && a.first == b.first;
  r.value = r.pass ? 0 : 1;
  r.detail = r.pass ? "checkpoints and histories bit-identical" : "runs diverged";
  return r;
}

}  // namespace hsi::verify
