#include "smoothdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

namespace {

void require_timestep(int t, int lo, int hi, const char* what) {
  if (t < lo || t > hi) {
    throw Error(ErrorCode::kTimestep, std::string(what) + " = " + std::to_string(t) + " outside [" +
                                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

void require_same_shape(const LatentVideo& a, const LatentVideo& b, const char* what) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShape, std::string(what) + ": clip shapes differ");
}

// out[f] = ca * a[f] + cb * b[f]
LatentVideo combine(const LatentVideo& a, double ca, const LatentVideo& b, double cb) {
  std::vector<Tensor> out;
  out.reserve(a.frame_count());
  for (std::size_t f = 0; f < a.frame_count(); ++f) {
    Tensor frame = a[f];
    frame *= ca;
    frame.add_scaled(b[f], cb);
    out.push_back(std::move(frame));
  }
  return LatentVideo(std::move(out));
}

// Shared by predict_x0 and inversion; t = 0 is the identity.
LatentVideo x0_from_eps(const LatentVideo& x_t, const NoisePrediction& eps, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  const double inv = 1.0 / std::sqrt(ab);
  return combine(x_t, inv, eps, -std::sqrt(1.0 - ab) * inv);
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas) {
  if (betas.size() < 2) throw Error(ErrorCode::kConfig, "schedule needs at least 2 steps");
  beta_.reserve(betas.size() + 1);
  alpha_.reserve(betas.size() + 1);
  alpha_bar_.reserve(betas.size() + 1);
  beta_.push_back(0.0);
  alpha_.push_back(1.0);
  alpha_bar_.push_back(1.0);
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw Error(ErrorCode::kConfig, "beta outside (0, 1)");
    beta_.push_back(b);
    alpha_.push_back(1.0 - b);
    alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
  }
}

void NoiseSchedule::check(int t) const { require_timestep(t, 0, steps(), "t"); }

double NoiseSchedule::beta(int t) const {
  check(t);
  return beta_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha(int t) const {
  check(t);
  return alpha_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
  check(t);
  return alpha_bar_[static_cast<std::size_t>(t)];
}

std::uint64_t NoiseSchedule::hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double b : beta_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &b, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw Error(ErrorCode::kConfig, "schedule needs T >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error(ErrorCode::kConfig, "need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    betas[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * i / (steps - 1);
  }
  return NoiseSchedule(std::move(betas));
}

LatentVideo::LatentVideo(std::vector<Tensor> frames) : frames_(std::move(frames)) {
  for (const auto& f : frames_) {
    if (f.dims() != frames_.front().dims()) throw Error(ErrorCode::kShape, "frames have differing extents");
  }
}

LatentVideo LatentVideo::zeros(std::size_t frame_count, const Extents& frame_dims) {
  return LatentVideo(std::vector<Tensor>(frame_count, Tensor(frame_dims)));
}

const Extents& LatentVideo::frame_dims() const {
  if (frames_.empty()) throw Error(ErrorCode::kShape, "empty clip has no frame extents");
  return frames_.front().dims();
}

std::size_t LatentVideo::frame_size() const { return frames_.empty() ? 0 : frames_.front().size(); }

bool LatentVideo::same_shape(const LatentVideo& other) const noexcept {
  if (frames_.size() != other.frames_.size()) return false;
  return frames_.empty() || frames_.front().dims() == other.frames_.front().dims();
}

bool LatentVideo::all_finite() const noexcept {
  return std::all_of(frames_.begin(), frames_.end(), [](const Tensor& f) { return f.all_finite(); });
}

LatentVideo gaussian_video(const SeededRng& rng, std::size_t frame_count, const Extents& frame_dims, bool shared) {
  std::vector<Tensor> frames;
  frames.reserve(frame_count);
  for (std::size_t f = 0; f < frame_count; ++f) {
    SeededRng stream = rng.split(shared ? 0 : f);
    frames.push_back(gaussian_sample(stream, frame_dims));
  }
  return LatentVideo(std::move(frames));
}

double mean_squared_difference(const LatentVideo& a, const LatentVideo& b) {
  require_same_shape(a, b, "mean_squared_difference");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < a.frame_count(); ++f) {
    for (std::size_t i = 0; i < a[f].size(); ++i) {
      const double d = a[f][i] - b[f][i];
      acc += d * d;
    }
    n += a[f].size();
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

LatentVideo forward_noise(const LatentVideo& x0, int t, const LatentVideo& z, const NoiseSchedule& s) {
  require_timestep(t, 1, s.steps(), "t");
  require_same_shape(x0, z, "forward_noise");
  const double ab = s.alpha_bar(t);
  return combine(x0, std::sqrt(ab), z, std::sqrt(1.0 - ab));
}

LatentVideo predict_x0(const LatentVideo& x_t, const NoisePrediction& eps, int t, const NoiseSchedule& s) {
  require_timestep(t, 1, s.steps(), "t");
  require_same_shape(x_t, eps, "predict_x0");
  return x0_from_eps(x_t, eps, t, s);
}

LatentVideo ddim_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_prev,
                      const NoiseSchedule& s) {
  return ddim_step(x_t, eps, t, t_prev, 0.0, LatentVideo{}, s);
}

LatentVideo ddim_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_prev, double sigma,
                      const LatentVideo& z, const NoiseSchedule& s) {
  require_timestep(t, 1, s.steps(), "t");
  require_timestep(t_prev, 0, t - 1, "t_prev");
  require_same_shape(x_t, eps, "ddim_step");
  const double ab_prev = s.alpha_bar(t_prev);
  if (sigma < 0.0 || sigma * sigma > 1.0 - ab_prev) {
    throw Error(ErrorCode::kInvalidSigma, "sigma^2 exceeds 1 - alpha_bar(t_prev)");
  }
  LatentVideo x0 = predict_x0(x_t, eps, t, s);
  LatentVideo out = combine(x0, std::sqrt(ab_prev), eps, std::sqrt(1.0 - ab_prev - sigma * sigma));
  if (sigma > 0.0) {
    require_same_shape(x_t, z, "ddim_step noise");
    for (std::size_t f = 0; f < out.frame_count(); ++f) out[f].add_scaled(z[f], sigma);
  }
  return out;
}

LatentVideo ddim_invert_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_next,
                             const NoiseSchedule& s) {
  require_timestep(t_next, 1, s.steps(), "t_next");
  require_timestep(t, 0, t_next - 1, "t");
  require_same_shape(x_t, eps, "ddim_invert_step");
  const double ab_next = s.alpha_bar(t_next);
  LatentVideo x0 = x0_from_eps(x_t, eps, t, s);
  return combine(x0, std::sqrt(ab_next), eps, std::sqrt(1.0 - ab_next));
}

double coefficient_c(int t, const NoiseSchedule& s) { return coefficient_c(t, t - 1, s); }

double coefficient_c(int t, int t_prev, const NoiseSchedule& s) {
  require_timestep(t, 1, s.steps(), "t");
  require_timestep(t_prev, 0, t - 1, "t_prev");
  const double ab = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar(t_prev);
  const double denom = std::sqrt(ab) * std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev) * std::sqrt(1.0 - ab);
  return std::sqrt(ab) / denom;
}

std::vector<double> adjacent_difference_residual(const LatentVideo& x_t, const LatentVideo& x_prev,
                                                 const NoisePrediction& eps, int t, const NoiseSchedule& s) {
  return adjacent_difference_residual(x_t, x_prev, eps, t, t - 1, s);
}

std::vector<double> adjacent_difference_residual(const LatentVideo& x_t, const LatentVideo& x_prev,
                                                 const NoisePrediction& eps, int t, int t_prev,
                                                 const NoiseSchedule& s) {
  require_same_shape(x_t, x_prev, "adjacent_difference_residual");
  require_same_shape(x_t, eps, "adjacent_difference_residual");
  if (x_t.frame_count() < 2) throw Error(ErrorCode::kInsufficientFrames, "need at least 2 frames");
  const double c = coefficient_c(t, t_prev, s);
  const double ratio = std::sqrt(s.alpha_bar(t_prev) / s.alpha_bar(t));
  std::vector<double> residuals;
  residuals.reserve(x_t.frame_count() - 1);
  for (std::size_t n = 1; n < x_t.frame_count(); ++n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x_t.frame_size(); ++i) {
      const double d_eps = eps[n - 1][i] - eps[n][i];
      const double d_prev = x_prev[n - 1][i] - x_prev[n][i];
      const double d_cur = x_t[n - 1][i] - x_t[n][i];
      worst = std::max(worst, std::abs(d_eps - c * (d_prev - ratio * d_cur)));
    }
    residuals.push_back(worst);
  }
  return residuals;
}

}  // namespace smoothdiff
