#include <benchmark/benchmark.h>

#include "sci/ad/ops.hpp"
#include "sci/gaptv.hpp"
#include "sci/mask.hpp"
#include "sci/random.hpp"
#include "sci/res2former.hpp"
#include "sci/scenes.hpp"
#include "sci/sensor.hpp"

using namespace sci;

namespace {

ad::Tensor random_tensor(ad::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return ad::Tensor::from(std::move(shape), std::move(v));
}

}  // namespace

static void BM_Conv3dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  const auto x = random_tensor({c, 8, s, s}, 1);
  const auto w = random_tensor({c, c, 3, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ad::conv3d(x, w, b, {1, 1, 1}, {1, 1, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c) * c * 27 * 8 * s * s);
}
BENCHMARK(BM_Conv3dForward)->Args({16, 16})->Args({16, 32})->Args({32, 16})->Unit(benchmark::kMillisecond);

static void BM_Conv3dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  auto x = random_tensor({c, 8, s, s}, 1);
  auto w = random_tensor({c, c, 3, 3, 3}, 2);
  x.set_requires_grad(true);
  w.set_requires_grad(true);
  for (auto _ : state) {
    const auto loss = ad::sum(ad::conv3d(x, w, {}, {1, 1, 1}, {1, 1, 1}));
    loss.backward();
  }
}
BENCHMARK(BM_Conv3dBackward)->Args({16, 16})->Args({16, 32})->Unit(benchmark::kMillisecond);

static void BM_Structuralize(benchmark::State& state) {
  const int lambda = static_cast<int>(state.range(0));
  const auto mprime = mask::LearnableMask::uniform_random(8, 256, 256, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mask::structuralize(mprime, lambda));
  state.SetItemsProcessed(state.iterations() * 256 * 256);
}
BENCHMARK(BM_Structuralize)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_Encode(benchmark::State& state) {
  const auto video = scenes::synthesize_scene({}, 8, 256, 256, 5);
  const auto m = mask::random_structural(8, 256, 256, 4, 6);
  const sensor::SensorModel sensor;
  for (auto _ : state) benchmark::DoNotOptimize(sensor::encode(video, m, sensor));
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);

static void BM_GapTv(benchmark::State& state) {
  const auto video = scenes::synthesize_scene({}, 8, 64, 64, 5);
  const auto m = mask::random_structural(8, 64, 64, 4, 6);
  const auto y = sensor::encode(video, m, {});
  gaptv::GapTvConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gaptv::gap_tv_decode(y, m, cfg));
}
BENCHMARK(BM_GapTv)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_ToyDecoderForward(benchmark::State& state) {
  auto cfg = net::Res2formerConfig::toy();
  cfg.embed_stride = static_cast<int>(state.range(0));
  const net::Res2former network(cfg, 7);
  const auto coarse = random_tensor({8, 32, 32}, 8);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(network.forward(coarse));
}
BENCHMARK(BM_ToyDecoderForward)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
