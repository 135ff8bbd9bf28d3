#pragma once

#include <string_view>

#include "smoothdiff/schedule.hpp"

namespace smoothdiff {

enum class LossVariant { kNone, kNaive, kCrossFrame, kSimple };

std::string_view to_string(LossVariant v);
LossVariant parse_loss_variant(std::string_view name);

// How the schedule coefficient C is evaluated for the constraint terms.
enum class CoefficientMode {
  kPerTimestep,  // C at the sampled training timestep
  kFixed,        // C at a single representative timestep
};

struct ConstraintParams {
  double lambda1 = 1000.0;
  double lambda2 = 0.2;
  CoefficientMode c_mode = CoefficientMode::kPerTimestep;
  int fixed_c_timestep = 500;

  // C(t) / lambda1, the slope tying noise differences to latent differences.
  double c_ratio(int t, const NoiseSchedule& s) const;
  void validate() const;
};

struct LossValue {
  double value = 0.0;
  NoisePrediction grad;
};

struct LossReport {
  double l_org = 0.0;
  double l_noise = 0.0;
  double total = 0.0;
  NoisePrediction grad_eps;
};

// Mean squared error over every element of every frame.
LossValue l_org(const NoisePrediction& eps_pred, const NoisePrediction& eps_true);

// Mean square of (eps[n] - eps[n+1]) - c (x[n] - x[n+1]) over adjacent pairs.
LossValue noise_constraint_naive(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                 const ConstraintParams& params, const NoiseSchedule& s);

// Mean square of D'eps_i - c D'x_i over interior frames, where
// D'a_i = (a_i - a_{i+1}) + (a_i - a_{i-1}).
LossValue noise_constraint_crossframe(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                      const ConstraintParams& params, const NoiseSchedule& s);

// Mean square of D'eps_i over interior frames.
LossValue noise_constraint_simple(const NoisePrediction& eps);

// total = l_org + lambda2 * l_variant, with the exact summed gradient.
LossReport combined_loss(const NoisePrediction& eps_pred, const NoisePrediction& eps_true, const LatentVideo& x_t,
                         int t, const ConstraintParams& params, LossVariant variant, const NoiseSchedule& s);

}  // namespace smoothdiff
