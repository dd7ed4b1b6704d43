// Serial reference vs OpenMP kernels on base-model shapes (S=7, B=15, batch 256).
// Arg(0) is the thread count for the omp variants; 0 keeps the runtime default.

#include <benchmark/benchmark.h>

#include <vector>

#include "hsi/kernels.hpp"
#include "hsi/rng.hpp"

namespace k = hsi::kernels;

namespace {

std::vector<float> randv(std::size_t n, std::uint64_t seed) {
  hsi::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
  return v;
}

// Second convolution of the base model: 8 maps of 5x5x13 into 16 kernels.
constexpr k::Conv3dDims kConv{256, 8, 5, 5, 13, 16, 3, 3, 3};
constexpr k::DenseDims kDense{256, 288, 256};

struct ConvData {
  std::vector<float> in = randv(kConv.batch * kConv.in_ch * kConv.in_volume(), 1);
  std::vector<float> w = randv(kConv.out_ch * kConv.kernel_volume() * kConv.in_ch, 2);
  std::vector<float> b = randv(kConv.out_ch, 3);
  std::vector<float> g = randv(kConv.batch * kConv.out_ch * kConv.out_volume(), 4);
  std::vector<float> out = std::vector<float>(g.size());
  std::vector<float> gin = std::vector<float>(in.size());
  std::vector<float> gw = std::vector<float>(w.size());
  std::vector<float> gb = std::vector<float>(b.size());
};

ConvData& conv() {
  static ConvData d;
  return d;
}

void threads_from(benchmark::State& st) {
  if (st.range(0) > 0) k::set_threads(static_cast<int>(st.range(0)));
}

template <bool Omp>
void BM_conv_forward(benchmark::State& st) {
  if constexpr (Omp) threads_from(st);
  auto& d = conv();
  for (auto _ : st) {
    if constexpr (Omp) k::omp::conv3d_forward(kConv, d.in.data(), d.w.data(), d.b.data(), d.out.data());
    else k::serial::conv3d_forward(kConv, d.in.data(), d.w.data(), d.b.data(), d.out.data());
    benchmark::DoNotOptimize(d.out.data());
  }
}

template <bool Omp>
void BM_conv_backward(benchmark::State& st) {
  if constexpr (Omp) threads_from(st);
  auto& d = conv();
  for (auto _ : st) {
    if constexpr (Omp) {
      k::omp::conv3d_backward_input(kConv, d.w.data(), d.g.data(), d.gin.data());
      k::omp::conv3d_backward_weights(kConv, d.in.data(), d.g.data(), d.gw.data(), d.gb.data());
    } else {
      k::serial::conv3d_backward_input(kConv, d.w.data(), d.g.data(), d.gin.data());
      k::serial::conv3d_backward_weights(kConv, d.in.data(), d.g.data(), d.gw.data(), d.gb.data());
    }
    benchmark::DoNotOptimize(d.gw.data());
  }
}

template <bool Omp>
void BM_dense_forward(benchmark::State& st) {
  if constexpr (Omp) threads_from(st);
  static const auto x = randv(kDense.batch * kDense.n_in, 5), w = randv(kDense.n_in * kDense.n_out, 6),
                    b = randv(kDense.n_out, 7);
  std::vector<float> y(kDense.batch * kDense.n_out);
  for (auto _ : st) {
    if constexpr (Omp) k::omp::dense_forward(kDense, x.data(), w.data(), b.data(), y.data());
    else k::serial::dense_forward(kDense, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Omp>
void BM_scatter(benchmark::State& st) {
  if constexpr (Omp) threads_from(st);
  // Band covariance of a 128x128 scene with 224 bands.
  const std::size_t rows = 128 * 128, cols = 224;
  static const auto xf = randv(rows * cols, 8);
  static const std::vector<double> x(xf.begin(), xf.end());
  std::vector<double> out(cols * cols);
  for (auto _ : st) {
    if constexpr (Omp) k::omp::scatter_matrix(rows, cols, x.data(), double(rows - 1), out.data());
    else k::serial::scatter_matrix(rows, cols, x.data(), double(rows - 1), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Omp>
void BM_gather(benchmark::State& st) {
  if constexpr (Omp) threads_from(st);
  const k::PatchDims pd{128, 128, 15, 7, 4096};
  static const auto cube = randv(128 * 128 * 15, 9);
  std::vector<std::uint32_t> centres;
  hsi::Rng rng(10);
  for (std::size_t i = 0; i < pd.count; ++i) {
    centres.push_back(static_cast<std::uint32_t>(rng.below(128)));
    centres.push_back(static_cast<std::uint32_t>(rng.below(128)));
  }
  std::vector<float> out(pd.count * 7 * 7 * 15);
  for (auto _ : st) {
    if constexpr (Omp) k::omp::gather_patches(pd, cube.data(), centres.data(), out.data());
    else k::serial::gather_patches(pd, cube.data(), centres.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

#define HSI_BENCH_PAIR(fn)                                                          \
  BENCHMARK(fn<false>)->Name(#fn "/serial")->Unit(benchmark::kMillisecond)->UseRealTime(); \
  BENCHMARK(fn<true>)->Name(#fn "/omp")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

HSI_BENCH_PAIR(BM_conv_forward)
HSI_BENCH_PAIR(BM_conv_backward)
HSI_BENCH_PAIR(BM_dense_forward)
HSI_BENCH_PAIR(BM_scatter)
HSI_BENCH_PAIR(BM_gather)

BENCHMARK_MAIN();
