#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "smoothdiff/denoiser.hpp"
#include "smoothdiff/losses.hpp"

namespace smoothdiff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;

  static AdamState zeros_like(const ParameterSet& params);
};

// Bias-corrected adaptive-moment step, applied in place.
void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  int steps = 2000;
  AdamConfig optimizer;
  LossVariant variant = LossVariant::kCrossFrame;
  ConstraintParams constraint;
  double null_condition_prob = 0.1;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables intermediate checkpoints
  bool shared_noise = false;  // same forward noise on every frame (ablation)

  void validate() const;
};

struct TrainLogRecord {
  int iter = 0;
  int t = 0;
  double l_org = 0.0;
  double l_noise = 0.0;
  double total = 0.0;
  bool null_condition = false;

  friend bool operator==(const TrainLogRecord&, const TrainLogRecord&) = default;
};

struct TrainHooks {
  std::function<void(const TrainLogRecord&)> on_record;
  std::function<void(const DenoiserModel&, const AdamState&, int iter)> on_checkpoint;
};

struct TrainResult {
  DenoiserModel model;
  AdamState optimizer;
  std::vector<TrainLogRecord> log;
};

// One-shot tuning on a single clip. Iteration i draws all of its randomness
// from stream i of the configured seed, so a run resumed from a checkpoint
// taken after iteration k continues exactly as the uninterrupted run would.
// Passing `resume` continues from its step count up to cfg.steps.
TrainResult train_one_shot(DenoiserModel model, const LatentVideo& clip, const Condition& cond,
                           const NoiseSchedule& schedule, const TrainConfig& cfg, const TrainHooks& hooks = {},
                           std::optional<AdamState> resume = std::nullopt);

}  // namespace smoothdiff
