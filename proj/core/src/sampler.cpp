#include "smoothdiff/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

std::string_view to_string(InitMode m) { return m == InitMode::kRandom ? "random" : "inversion"; }

InitMode parse_init_mode(std::string_view name) {
  if (name == "random") return InitMode::kRandom;
  if (name == "inversion") return InitMode::kInversion;
  throw Error(ErrorCode::kConfig, "unknown init mode '" + std::string(name) + "'");
}

void SamplerConfig::validate(int timesteps) const {
  if (num_steps < 1 || num_steps > timesteps) {
    throw Error(ErrorCode::kConfig, "sample.num_steps must lie in [1, T]");
  }
  if (!(guidance >= 0.0)) throw Error(ErrorCode::kConfig, "guidance scale must be >= 0");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kConfig, "sigma must be >= 0");
  if (!(constraint.lambda3 >= 0.0 && constraint.lambda3 <= 1.0)) {
    throw Error(ErrorCode::kConfig, "lambda3 must lie in [0, 1]");
  }
  if (!(constraint.lambda1 > 0.0)) throw Error(ErrorCode::kConfig, "lambda1 must be positive");
}

std::vector<int> strided_timesteps(int timesteps, int num_steps) {
  if (num_steps < 1 || num_steps > timesteps) throw Error(ErrorCode::kConfig, "num_steps must lie in [1, T]");
  std::vector<int> ts;
  ts.reserve(static_cast<std::size_t>(num_steps));
  for (int i = 0; i < num_steps; ++i) {
    ts.push_back(static_cast<int>((static_cast<long long>(num_steps - i) * timesteps) / num_steps));
  }
  return ts;
}

NoisePrediction cfg_predict(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond,
                            double guidance) {
  NoisePrediction uncond = forward(model, x_t, t, Condition::null(cond.width()));
  NoisePrediction conditioned = forward(model, x_t, t, cond);
  // (1 - w) u + w c rather than u + w (c - u): exact at w = 0 and w = 1.
  const double keep = 1.0 - guidance;
  for (std::size_t f = 0; f < uncond.frame_count(); ++f) {
    for (std::size_t i = 0; i < uncond[f].size(); ++i) {
      uncond[f][i] = keep * uncond[f][i] + guidance * conditioned[f][i];
    }
  }
  return uncond;
}

NoisePrediction apply_inference_constraint(const NoisePrediction& eps, const LatentVideo& x_t, int t,
                                           const InferenceConstraintConfig& cfg, const NoiseSchedule& s) {
  if (eps.frame_count() < 2) throw Error(ErrorCode::kInsufficientFrames, "inference constraint needs 2 frames");
  if (!eps.same_shape(x_t)) throw Error(ErrorCode::kShape, "inference constraint: clip shapes differ");
  const double ratio = coefficient_c(t, s) / cfg.lambda1;
  NoisePrediction out = eps;
  for (std::size_t f = 1; f < eps.frame_count(); ++f) {
    for (std::size_t i = 0; i < eps[f].size(); ++i) {
      const double d_eps = eps[f][i] - eps[f - 1][i];
      const double d_x = x_t[f][i] - x_t[f - 1][i];
      out[f][i] -= cfg.lambda3 * (d_eps - ratio * d_x);
    }
  }
  return out;
}

double mean_adjacent_difference(const LatentVideo& clip) {
  if (clip.frame_count() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t f = 1; f < clip.frame_count(); ++f) acc += l2_norm(clip[f] - clip[f - 1]);
  return acc / static_cast<double>(clip.frame_count() - 1);
}

LatentVideo ddim_invert(const DenoiserModel& model, const LatentVideo& clip, const Condition& cond,
                        const NoiseSchedule& s, int num_steps) {
  std::vector<int> levels = strided_timesteps(s.steps(), num_steps);
  levels.push_back(0);
  std::reverse(levels.begin(), levels.end());
  LatentVideo x = clip;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const int cur = levels[i];
    // The network has no t = 0 embedding; the first step uses t = 1.
    NoisePrediction eps = forward(model, x, std::max(cur, 1), cond);
    x = ddim_invert_step(x, eps, cur, levels[i + 1], s);
  }
  return x;
}

SampleResult sample(const DenoiserModel& model, const Condition& cond, const NoiseSchedule& s,
                    const SamplerConfig& cfg, std::size_t frame_count, const SampleSource& source) {
  cfg.validate(s.steps());
  const SeededRng root(cfg.seed, 0x73616d70ULL);

  SampleResult result;
  if (cfg.init == InitMode::kInversion) {
    if (!source.clip || !source.condition) {
      throw Error(ErrorCode::kConfig, "inversion init needs a source clip and source condition");
    }
    result.init = ddim_invert(model, *source.clip, *source.condition, s, cfg.num_steps);
  } else {
    if (frame_count == 0) throw Error(ErrorCode::kInvalidDimension, "frame count must be positive");
    result.init = gaussian_video(root.split(0), frame_count, model.dims().frame_extents(), cfg.shared_init_noise);
  }

  const std::vector<int> ts = strided_timesteps(s.steps(), cfg.num_steps);
  LatentVideo x = result.init;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int step = static_cast<int>(i);
    const int t = ts[i];
    const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;

    StepDiagnostics diag;
    diag.step = step;
    diag.t = t;
    diag.t_prev = t_prev;
    diag.mean_d_x = mean_adjacent_difference(x);

    NoisePrediction eps = cfg_predict(model, x, t, cond, cfg.guidance);
    diag.mean_d_eps_raw = mean_adjacent_difference(eps);
    if (cfg.constraint.active_at(step) && x.frame_count() >= 2) {
      eps = apply_inference_constraint(eps, x, t, cfg.constraint, s);
      diag.constrained = true;
    }
    diag.mean_d_eps = mean_adjacent_difference(eps);
    result.diagnostics.push_back(diag);

    // The stochastic term is capped at its largest admissible value for this step.
    const double sigma = std::min(cfg.sigma, std::sqrt(1.0 - s.alpha_bar(t_prev)));
    if (sigma > 0.0) {
      LatentVideo z = gaussian_video(root.split(1 + i), x.frame_count(), x.frame_dims());
      x = ddim_step(x, eps, t, t_prev, sigma, z, s);
    } else {
      x = ddim_step(x, eps, t, t_prev, s);
    }
  }
  result.clip = std::move(x);
  return result;
}

std::uint8_t quantize(double v) noexcept {
  const double scaled = std::floor((v + 1.0) * 127.5 + 0.5);
  if (!(scaled >= 0.0)) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

double dequantize(std::uint8_t b) noexcept { return static_cast<double>(b) / 127.5 - 1.0; }

std::vector<Image> decode_frames(const LatentVideo& clip) {
  std::vector<Image> images;
  images.reserve(clip.frame_count());
  for (const auto& frame : clip.frames()) {
    if (frame.rank() != 3) throw Error(ErrorCode::kShape, "frames must be [C, H, W]");
    const std::size_t c = frame.dims()[0], h = frame.dims()[1], w = frame.dims()[2];
    Image img{w, h, c, std::vector<std::uint8_t>(c * h * w)};
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          img.pixels[(y * w + x) * c + ch] = quantize(frame[(ch * h + y) * w + x]);
        }
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

LatentVideo encode_images(const std::vector<Image>& frames) {
  std::vector<Tensor> out;
  out.reserve(frames.size());
  for (const auto& img : frames) {
    if (img.pixels.size() != img.width * img.height * img.channels) {
      throw Error(ErrorCode::kShape, "image pixel buffer does not match its extents");
    }
    Tensor t({img.channels, img.height, img.width});
    for (std::size_t ch = 0; ch < img.channels; ++ch) {
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
          t[(ch * img.height + y) * img.width + x] = dequantize(img.at(y, x, ch));
        }
      }
    }
    out.push_back(std::move(t));
  }
  return LatentVideo(std::move(out));
}

}  // namespace smoothdiff
