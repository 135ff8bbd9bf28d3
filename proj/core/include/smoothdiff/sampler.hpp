#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "smoothdiff/denoiser.hpp"
#include "smoothdiff/image.hpp"

namespace smoothdiff {

struct InferenceConstraintConfig {
  bool enabled = false;
  double lambda3 = 0.5;
  double lambda1 = 1000.0;
  // Sampling step indices [first_step, last_step) receive the correction;
  // last_step < 0 means through the final step.
  int first_step = 0;
  int last_step = -1;

  bool active_at(int step) const noexcept {
    return enabled && step >= first_step && (last_step < 0 || step < last_step);
  }
};

enum class InitMode { kRandom, kInversion };

std::string_view to_string(InitMode m);
InitMode parse_init_mode(std::string_view name);

struct SamplerConfig {
  int num_steps = 50;
  double sigma = 0.0;
  double guidance = 7.5;
  InitMode init = InitMode::kInversion;
  // Random init only: every frame starts from the same noise draw.
  bool shared_init_noise = false;
  std::uint64_t seed = 0;
  InferenceConstraintConfig constraint;

  void validate(int timesteps) const;
};

// Descending timesteps t_0 = T > t_1 > ... > t_{S-1} >= 1; the step from
// t_{S-1} lands on t = 0.
std::vector<int> strided_timesteps(int timesteps, int num_steps);

// eps(null) + w (eps(cond) - eps(null))
NoisePrediction cfg_predict(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond,
                            double guidance);

// Training-free correction of noise predictions. Every frame i >= 1 is moved
// toward the latent-implied difference with its predecessor, all frames
// updated from the unmodified input:
//   eps_i -= lambda3 ((eps_i - eps_{i-1}) - (C / lambda1)(x_i - x_{i-1}))
NoisePrediction apply_inference_constraint(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                           const InferenceConstraintConfig& cfg, const NoiseSchedule& s);

// Mean over adjacent pairs of the L2 norm of a[i] - a[i-1].
double mean_adjacent_difference(const LatentVideo& clip);

struct StepDiagnostics {
  int step = 0;
  int t = 0;
  int t_prev = 0;
  double mean_d_eps = 0.0;      // of the prediction actually used
  double mean_d_eps_raw = 0.0;  // before the inference constraint
  double mean_d_x = 0.0;        // of x_t entering the step
  bool constrained = false;

  friend bool operator==(const StepDiagnostics&, const StepDiagnostics&) = default;
};

struct SampleSource {
  // Required for InitMode::kInversion.
  std::optional<LatentVideo> clip;
  std::optional<Condition> condition;
};

struct SampleResult {
  LatentVideo clip;
  LatentVideo init;
  std::vector<StepDiagnostics> diagnostics;
};

// Runs the model up the strided schedule from a clean clip (first-order DDIM
// inversion, conditional prediction without guidance).
LatentVideo ddim_invert(const DenoiserModel& model, const LatentVideo& clip, const Condition& cond,
                        const NoiseSchedule& s, int num_steps);

// frame_count/frame extents come from the model; random init needs only cfg.seed.
SampleResult sample(const DenoiserModel& model, const Condition& cond, const NoiseSchedule& s,
                    const SamplerConfig& cfg, std::size_t frame_count, const SampleSource& source = {});

// Affine map [-1, 1] -> [0, 255] with round-half-up and clamping.
std::uint8_t quantize(double v) noexcept;
double dequantize(std::uint8_t b) noexcept;

std::vector<Image> decode_frames(const LatentVideo& clip);
LatentVideo encode_images(const std::vector<Image>& frames);

}  // namespace smoothdiff
