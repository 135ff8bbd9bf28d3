#pragma once

#include <cstdint>
#include <vector>

#include "smoothdiff/tensor.hpp"

namespace smoothdiff {

// Variance schedule tables indexed by timestep t = 0..T, with beta(0) = 0 and
// alpha_bar(0) = 1 so that steps ending at t = 0 are well defined.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> betas);

  int steps() const noexcept { return static_cast<int>(beta_.size()) - 1; }
  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;

  // FNV-1a over the raw beta table; used to tag checkpoints.
  std::uint64_t hash() const noexcept;

 private:
  void check(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

// Linear betas from beta_start to beta_end inclusive over T steps.
NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end);

// A clip of per-frame [C, H, W] tensors sharing identical extents.
class LatentVideo {
 public:
  LatentVideo() = default;
  explicit LatentVideo(std::vector<Tensor> frames);

  static LatentVideo zeros(std::size_t frame_count, const Extents& frame_dims);

  std::size_t frame_count() const noexcept { return frames_.size(); }
  const Extents& frame_dims() const;
  std::size_t frame_size() const;

  const Tensor& operator[](std::size_t i) const { return frames_[i]; }
  Tensor& operator[](std::size_t i) { return frames_[i]; }
  const std::vector<Tensor>& frames() const noexcept { return frames_; }

  bool same_shape(const LatentVideo& other) const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const LatentVideo&, const LatentVideo&) = default;

 private:
  std::vector<Tensor> frames_;
};

// Per-frame noise predictions; shape-matched to the clip they were made for.
using NoisePrediction = LatentVideo;

// Per-frame Gaussian noise. Frame f draws from stream f of `rng` unless
// `shared` is set, in which case every frame receives the same draw.
LatentVideo gaussian_video(const SeededRng& rng, std::size_t frame_count, const Extents& frame_dims,
                           bool shared = false);

double mean_squared_difference(const LatentVideo& a, const LatentVideo& b);

// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) z
LatentVideo forward_noise(const LatentVideo& x0, int t, const LatentVideo& z, const NoiseSchedule& s);

// (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
LatentVideo predict_x0(const LatentVideo& x_t, const NoisePrediction& eps, int t, const NoiseSchedule& s);

// Deterministic DDIM step (sigma = 0) from t to t_prev.
LatentVideo ddim_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_prev,
                      const NoiseSchedule& s);

// Generalised DDIM step: sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps + sigma z.
LatentVideo ddim_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_prev, double sigma,
                      const LatentVideo& z, const NoiseSchedule& s);

// First-order DDIM inversion from t up to t_next, holding eps fixed.
LatentVideo ddim_invert_step(const LatentVideo& x_t, const NoisePrediction& eps, int t, int t_next,
                             const NoiseSchedule& s);

// Coefficient linking adjacent-frame noise differences to latent differences:
//   C = sqrt(ab_t) / (sqrt(ab_t) sqrt(1 - ab_prev) - sqrt(ab_prev) sqrt(1 - ab_t))
// with t_prev = t - 1 unless given. Negative whenever ab is strictly decreasing.
double coefficient_c(int t, const NoiseSchedule& s);
double coefficient_c(int t, int t_prev, const NoiseSchedule& s);

// For each adjacent frame pair (n-1, n), the max-abs entry of
//   d_eps - C * (d_x_prev - sqrt(ab_prev / ab_t) * d_x_t)
// where d_a = a[n-1] - a[n] and x_prev is the sigma = 0 DDIM step of (x_t, eps)
// from t to t_prev. Zero up to rounding when x_prev was produced that way.
std::vector<double> adjacent_difference_residual(const LatentVideo& x_t, const LatentVideo& x_prev,
                                                 const NoisePrediction& eps, int t, const NoiseSchedule& s);
std::vector<double> adjacent_difference_residual(const LatentVideo& x_t, const LatentVideo& x_prev,
                                                 const NoisePrediction& eps, int t, int t_prev,
                                                 const NoiseSchedule& s);

}  // namespace smoothdiff
