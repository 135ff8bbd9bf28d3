#include <benchmark/benchmark.h>

#include "smoothdiff/losses.hpp"
#include "smoothdiff/metrics.hpp"
#include "smoothdiff/sampler.hpp"
#include "smoothdiff/trainer.hpp"

using namespace smoothdiff;

namespace {

const NoiseSchedule& schedule() {
  static const NoiseSchedule s = build_linear_schedule(1000, 1e-4, 0.02);
  return s;
}

LatentVideo noise(std::size_t frames, const Extents& dims, std::uint64_t seed) {
  return gaussian_video(SeededRng(seed), frames, dims);
}

Condition condition(std::size_t width) {
  SeededRng rng(9);
  Condition c;
  for (std::size_t i = 0; i < width; ++i) c.values.push_back(rng.normal());
  return c;
}

// Arg: frame count at the default 16x16 model.
void BM_Forward(benchmark::State& state) {
  const DenoiserDims dims;
  SeededRng rng(1);
  const auto model = init_model(rng, dims);
  const auto x = noise(static_cast<std::size_t>(state.range(0)), dims.frame_extents(), 2);
  const auto c = condition(dims.condition_width);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x, 500, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(2)->Arg(8)->Arg(16);

void BM_Backward(benchmark::State& state) {
  const DenoiserDims dims;
  SeededRng rng(1);
  const auto model = init_model(rng, dims);
  const auto frames = static_cast<std::size_t>(state.range(0));
  const auto x = noise(frames, dims.frame_extents(), 2);
  const auto g = noise(frames, dims.frame_extents(), 3);
  const auto c = condition(dims.condition_width);
  for (auto _ : state) benchmark::DoNotOptimize(backward(model, x, 500, c, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(2)->Arg(8)->Arg(16);

void BM_CrossFrameLoss(benchmark::State& state) {
  const auto eps = noise(8, {1, 16, 16}, 4);
  const auto truth = noise(8, {1, 16, 16}, 5);
  const auto x = noise(8, {1, 16, 16}, 6);
  const ConstraintParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(combined_loss(eps, truth, x, 500, params, LossVariant::kCrossFrame, schedule()));
}
BENCHMARK(BM_CrossFrameLoss);

// Arg: window slack k at 24x24 latents.
void BM_VLScore(benchmark::State& state) {
  const auto v = noise(8, {1, 24, 24}, 7);
  const VLScoreConfig cfg{.k = static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(vl_score(v, cfg));
}
BENCHMARK(BM_VLScore)->Arg(0)->Arg(4)->Arg(8);

void BM_TrainSteps(benchmark::State& state) {
  const DenoiserDims dims;
  SeededRng rng(1);
  const auto model = init_model(rng, dims);
  const auto clip = noise(8, dims.frame_extents(), 8);
  const auto c = condition(dims.condition_width);
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.variant = state.range(0) ? LossVariant::kCrossFrame : LossVariant::kNone;
  for (auto _ : state) benchmark::DoNotOptimize(train_one_shot(model, clip, c, schedule(), cfg));
  state.SetItemsProcessed(state.iterations() * cfg.steps);
  state.SetLabel(std::string(to_string(cfg.variant)));
}
BENCHMARK(BM_TrainSteps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const DenoiserDims dims;
  SeededRng rng(1);
  const auto model = init_model(rng, dims);
  SamplerConfig cfg{.init = InitMode::kRandom};
  cfg.constraint.enabled = state.range(0) != 0;
  const auto c = condition(dims.condition_width);
  for (auto _ : state) benchmark::DoNotOptimize(sample(model, c, schedule(), cfg, 8));
}
BENCHMARK(BM_Sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
