#include "smoothdiff/losses.hpp"

#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

namespace {

void require_frames(const LatentVideo& v, std::size_t minimum, const char* what) {
  if (v.frame_count() < minimum) {
    throw Error(ErrorCode::kInsufficientFrames, std::string(what) + " needs at least " + std::to_string(minimum) +
                                                    " frames, got " + std::to_string(v.frame_count()));
  }
}

void require_same_shape(const LatentVideo& a, const LatentVideo& b, const char* what) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShape, std::string(what) + ": clip shapes differ");
}

// Mean-square of r_n = (eps[n] - eps[n+1]) - c (x[n] - x[n+1]); x may be null.
LossValue first_difference_loss(const NoisePrediction& eps, const LatentVideo* x, double c) {
  const std::size_t frames = eps.frame_count();
  const std::size_t n = eps.frame_size();
  LossValue out{0.0, LatentVideo::zeros(frames, eps.frame_dims())};
  const double count = static_cast<double>((frames - 1) * n);
  for (std::size_t f = 0; f + 1 < frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      double r = eps[f][i] - eps[f + 1][i];
      if (x) r -= c * ((*x)[f][i] - (*x)[f + 1][i]);
      out.value += r * r;
      const double g = 2.0 * r / count;
      out.grad[f][i] += g;
      out.grad[f + 1][i] -= g;
    }
  }
  out.value /= count;
  return out;
}

// Mean-square of r_i = D'eps_i - c D'x_i over interior frames; x may be null.
LossValue second_difference_loss(const NoisePrediction& eps, const LatentVideo* x, double c) {
  const std::size_t frames = eps.frame_count();
  const std::size_t n = eps.frame_size();
  LossValue out{0.0, LatentVideo::zeros(frames, eps.frame_dims())};
  const double count = static_cast<double>((frames - 2) * n);
  for (std::size_t f = 1; f + 1 < frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      double r = 2.0 * eps[f][i] - eps[f - 1][i] - eps[f + 1][i];
      if (x) r -= c * (2.0 * (*x)[f][i] - (*x)[f - 1][i] - (*x)[f + 1][i]);
      out.value += r * r;
      const double g = 2.0 * r / count;
      out.grad[f][i] += 2.0 * g;
      out.grad[f - 1][i] -= g;
      out.grad[f + 1][i] -= g;
    }
  }
  out.value /= count;
  return out;
}

}  // namespace

std::string_view to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kNone: return "none";
    case LossVariant::kNaive: return "naive";
    case LossVariant::kCrossFrame: return "crossframe";
    case LossVariant::kSimple: return "simple";
  }
  return "none";
}

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "none") return LossVariant::kNone;
  if (name == "naive") return LossVariant::kNaive;
  if (name == "crossframe") return LossVariant::kCrossFrame;
  if (name == "simple") return LossVariant::kSimple;
  throw Error(ErrorCode::kConfig, "unknown loss variant '" + std::string(name) + "'");
}

double ConstraintParams::c_ratio(int t, const NoiseSchedule& s) const {
  const int at = c_mode == CoefficientMode::kFixed ? fixed_c_timestep : t;
  return coefficient_c(at, s) / lambda1;
}

void ConstraintParams::validate() const {
  if (!(lambda1 > 0.0)) throw Error(ErrorCode::kConfig, "lambda1 must be positive");
  if (!(lambda2 >= 0.0)) throw Error(ErrorCode::kConfig, "lambda2 must be non-negative");
}

LossValue l_org(const NoisePrediction& eps_pred, const NoisePrediction& eps_true) {
  require_same_shape(eps_pred, eps_true, "l_org");
  const std::size_t frames = eps_pred.frame_count();
  if (frames == 0) throw Error(ErrorCode::kShape, "l_org of an empty clip");
  LossValue out{0.0, LatentVideo::zeros(frames, eps_pred.frame_dims())};
  const double count = static_cast<double>(frames * eps_pred.frame_size());
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < eps_pred[f].size(); ++i) {
      const double d = eps_pred[f][i] - eps_true[f][i];
      out.value += d * d;
      out.grad[f][i] = 2.0 * d / count;
    }
  }
  out.value /= count;
  return out;
}

LossValue noise_constraint_naive(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                 const ConstraintParams& params, const NoiseSchedule& s) {
  require_frames(eps, 2, "naive noise constraint");
  require_same_shape(eps, x_t, "naive noise constraint");
  return first_difference_loss(eps, &x_t, params.c_ratio(t, s));
}

LossValue noise_constraint_crossframe(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                      const ConstraintParams& params, const NoiseSchedule& s) {
  require_frames(eps, 3, "cross-frame noise constraint");
  require_same_shape(eps, x_t, "cross-frame noise constraint");
  return second_difference_loss(eps, &x_t, params.c_ratio(t, s));
}

LossValue noise_constraint_simple(const NoisePrediction& eps) {
  require_frames(eps, 3, "simple noise constraint");
  return second_difference_loss(eps, nullptr, 0.0);
}

LossReport combined_loss(const NoisePrediction& eps_pred, const NoisePrediction& eps_true, const LatentVideo& x_t,
                         int t, const ConstraintParams& params, LossVariant variant, const NoiseSchedule& s) {
  params.validate();
  LossValue base = l_org(eps_pred, eps_true);
  LossReport report{base.value, 0.0, base.value, std::move(base.grad)};
  // A zero weight drops the term entirely, so such runs match the baseline exactly.
  if (variant == LossVariant::kNone || params.lambda2 == 0.0) return report;

  LossValue noise;
  switch (variant) {
    case LossVariant::kNaive: noise = noise_constraint_naive(eps_pred, x_t, t, params, s); break;
    case LossVariant::kCrossFrame: noise = noise_constraint_crossframe(eps_pred, x_t, t, params, s); break;
    case LossVariant::kSimple: noise = noise_constraint_simple(eps_pred); break;
    case LossVariant::kNone: break;
  }
  report.l_noise = noise.value;
  report.total = report.l_org + params.lambda2 * noise.value;
  for (std::size_t f = 0; f < report.grad_eps.frame_count(); ++f) {
    report.grad_eps[f].add_scaled(noise.grad[f], params.lambda2);
  }
  return report;
}

}  // namespace smoothdiff
