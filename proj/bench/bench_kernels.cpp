// Parallel kernels against their serial reference versions, on decoder-sized
// inputs. Argument: feature map side; 88 input channels and 64 outputs match a
// 3×3 block of the decoder.
#include <benchmark/benchmark.h>

#include <random>

#include "phasenet/kernels.hpp"
#include "phasenet/pyramid.hpp"
#include "phasenet/reference_kernels.hpp"

namespace {

using namespace phasenet;

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor t(c, h, w);
  for (double& v : t.data) v = g(rng);
  return t;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

constexpr int kIn = 88;
constexpr int kOut = 64;

template <bool Parallel>
void BM_Conv3x3Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Tensor x = random_tensor(kIn, side, side, 1);
  const auto w = random_vector(static_cast<std::size_t>(kOut) * kIn * 9, 2);
  const auto b = random_vector(kOut, 3);
  Tensor y;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::conv2d(x, w, b, kOut, 3, y);
    else reference::conv2d(x, w, b, kOut, 3, y);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <bool Parallel>
void BM_Conv3x3Backward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Tensor x = random_tensor(kIn, side, side, 1);
  const Tensor gy = random_tensor(kOut, side, side, 4);
  const auto w = random_vector(static_cast<std::size_t>(kOut) * kIn * 9, 2);
  std::vector<double> gw(w.size()), gb(kOut);
  Tensor gx;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::conv2d_backward(x, gy, w, 3, &gx, gw, gb);
    else reference::conv2d_backward(x, gy, w, 3, &gx, gw, gb);
    benchmark::DoNotOptimize(gx.data.data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <bool Parallel>
void BM_Resize(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Tensor x = random_tensor(kOut, side * 2 / 3, side * 2 / 3, 5);
  Tensor y;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::resize_bilinear(x, side, side, y);
    else reference::resize_bilinear(x, side, side, y);
    benchmark::DoNotOptimize(y.data.data());
  }
}

template <bool Parallel>
void BM_BatchNormBackward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::vector<Tensor> xhat, grad;
  for (int s = 0; s < 8; ++s) {
    xhat.push_back(random_tensor(kOut, side, side, 10 + s));
    grad.push_back(random_tensor(kOut, side, side, 20 + s));
  }
  const auto gamma = random_vector(kOut, 6);
  const std::vector<double> var(kOut, 1.0);
  std::vector<double> gg(kOut), gb(kOut);
  for (auto _ : state) {
    state.PauseTiming();
    std::vector<Tensor> g = grad;
    state.ResumeTiming();
    if constexpr (Parallel) kernels::batch_norm_backward(xhat, g, gamma, var, 1e-5, gg, gb);
    else reference::batch_norm_backward(xhat, g, gamma, var, 1e-5, gg, gb);
    benchmark::DoNotOptimize(g.front().data.data());
  }
}

void BM_Decompose(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  PyramidConfig cfg;
  cfg.levels = side >= 256 ? 10 : 6;
  const FilterBank bank(cfg, {side, side});
  RealGrid img(side, side);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u;
  for (double& v : img) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(decompose(img, bank).low_pass.data());
}

}  // namespace

BENCHMARK(BM_Conv3x3Forward<true>)->Name("conv3x3_forward/parallel")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3x3Forward<false>)->Name("conv3x3_forward/reference")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3x3Backward<true>)->Name("conv3x3_backward/parallel")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3x3Backward<false>)->Name("conv3x3_backward/reference")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resize<true>)->Name("resize/parallel")->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Resize<false>)->Name("resize/reference")->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchNormBackward<true>)->Name("batch_norm_backward/parallel")->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchNormBackward<false>)->Name("batch_norm_backward/reference")->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Decompose)->Name("pyramid_decompose")->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
