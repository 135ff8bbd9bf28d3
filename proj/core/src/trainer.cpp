#include "smoothdiff/trainer.hpp"

#include <cmath>
#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

namespace {

std::size_t min_frames(LossVariant v) {
  switch (v) {
    case LossVariant::kNone: return 1;
    case LossVariant::kNaive: return 2;
    case LossVariant::kCrossFrame:
    case LossVariant::kSimple: return 3;
  }
  return 1;
}

}  // namespace

AdamState AdamState::zeros_like(const ParameterSet& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state, const AdamConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < kParamCount; ++p) {
    auto w = params.tensors[p].values();
    auto g = grads.tensors[p].values();
    auto m = state.m.tensors[p].values();
    auto v = state.v.tensors[p].values();
    if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
      throw Error(ErrorCode::kShape, "optimizer state does not match parameter " + std::string(param_name(p)));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::kConfig, "train.steps must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "learning rate must be positive");
  if (!(null_condition_prob >= 0.0 && null_condition_prob <= 1.0)) {
    throw Error(ErrorCode::kConfig, "null_condition_prob must lie in [0, 1]");
  }
  if (checkpoint_every < 0) throw Error(ErrorCode::kConfig, "checkpoint_every must be >= 0");
  constraint.validate();
}

TrainResult train_one_shot(DenoiserModel model, const LatentVideo& clip, const Condition& cond,
                           const NoiseSchedule& schedule, const TrainConfig& cfg, const TrainHooks& hooks,
                           std::optional<AdamState> resume) {
  cfg.validate();
  if (clip.frame_count() < min_frames(cfg.variant)) {
    throw Error(ErrorCode::kInsufficientFrames,
                std::string(to_string(cfg.variant)) + " loss needs at least " +
                    std::to_string(min_frames(cfg.variant)) + " frames");
  }
  if (schedule.steps() != model.dims().timesteps) {
    throw Error(ErrorCode::kConfig, "schedule length does not match the model's timestep table");
  }

  AdamState state = resume ? std::move(*resume) : AdamState::zeros_like(model.params());
  const Condition null_cond = Condition::null(cond.width());
  const SeededRng root(cfg.seed, 0x7472616eULL);
  const int T = schedule.steps();

  TrainResult result{model, {}, {}};
  for (int iter = static_cast<int>(state.step) + 1; iter <= cfg.steps; ++iter) {
    SeededRng rng = root.split(static_cast<std::uint64_t>(iter));
    int t = 1 + static_cast<int>(rng.uniform() * T);
    if (t > T) t = T;
    const bool use_null = rng.uniform() < cfg.null_condition_prob;
    const Condition& c = use_null ? null_cond : cond;

    LatentVideo noise = gaussian_video(rng.split(1), clip.frame_count(), clip.frame_dims(), cfg.shared_noise);
    LatentVideo x_t = forward_noise(clip, t, noise, schedule);
    NoisePrediction eps = forward(model, x_t, t, c);
    LossReport loss = combined_loss(eps, noise, x_t, t, cfg.constraint, cfg.variant, schedule);
    if (!std::isfinite(loss.total)) {
      throw Error(ErrorCode::kDiverged, "non-finite loss at iteration " + std::to_string(iter));
    }

    ParameterSet grads = backward(model, x_t, t, c, loss.grad_eps);
    adam_update(model.params(), grads, state, cfg.optimizer);
    if (!model.params().all_finite()) {
      throw Error(ErrorCode::kDiverged, "non-finite parameters after iteration " + std::to_string(iter));
    }

    TrainLogRecord rec{iter, t, loss.l_org, loss.l_noise, loss.total, use_null};
    result.log.push_back(rec);
    if (hooks.on_record) hooks.on_record(rec);
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 && iter != cfg.steps) {
      hooks.on_checkpoint(model, state, iter);
    }
  }
  result.model = std::move(model);
  result.optimizer = std::move(state);
  return result;
}

}  // namespace smoothdiff
