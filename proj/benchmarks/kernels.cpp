// Kernel and whole-model timings. The end-to-end latency protocol used for
// comparing presets lives in `rebotnet bench`; these are for profiling.

#include <benchmark/benchmark.h>

#include "rebot/metrics/bench.hpp"
#include "rebot/model/rebotnet.hpp"
#include "rebot/nn/blocks.hpp"
#include "rebot/ops.hpp"
#include "rebot/rng.hpp"
#include "rebot/tape.hpp"

namespace {

using namespace rebot;

Tensor filled(std::vector<std::int64_t> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

void BM_Conv1x1(benchmark::State& state) {
  const auto c = state.range(0);
  const auto x = filled({1, c, 48, 48}, 1), w = filled({4 * c, c, 1, 1}, 2), b = filled({4 * c}, 3);
  NoGradScope<float> guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 0));
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * 4 * c * c * 48 * 48, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Conv1x1)->Arg(16)->Arg(64)->Arg(128);

void BM_Depthwise7x7(benchmark::State& state) {
  const auto c = state.range(0);
  const auto x = filled({1, c, 48, 48}, 1), w = filled({c, 1, 7, 7}, 2), b = filled({c}, 3);
  NoGradScope<float> guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::depthwise_conv2d(x, w, b));
}
BENCHMARK(BM_Depthwise7x7)->Arg(16)->Arg(64);

void BM_TransposedConv(benchmark::State& state) {
  const auto c = state.range(0);
  const auto x = filled({1, c, 24, 24}, 1), w = filled({c, c / 2, 4, 4}, 2), b = filled({c / 2}, 3);
  NoGradScope<float> guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::transposed_conv2d(x, w, b, 2, 1));
}
BENCHMARK(BM_TransposedConv)->Arg(32)->Arg(128);

void BM_Mixer(benchmark::State& state) {
  const auto n = state.range(0);
  const nn::MixerBlock<float> block(n, 256, 256, 256);
  const auto x = filled({1, n, 256}, 1);
  NoGradScope<float> guard;
  for (auto _ : state) benchmark::DoNotOptimize(block(x));
}
BENCHMARK(BM_Mixer)->Arg(64)->Arg(576);

void BM_Forward(benchmark::State& state, const char* preset, int side) {
  auto cfg = preset_config(preset);
  cfg.height = cfg.width = side;
  const auto model = ReBotNet<float>::build(cfg, 0);
  const auto prev = filled({1, 3, side, side}, 1), cur = filled({1, 3, side, side}, 2);
  NoGradScope<float> guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(prev, cur));
}
BENCHMARK_CAPTURE(BM_Forward, tiny_64, "tiny", 64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, S_64, "S", 64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, S_128, "S", 128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
