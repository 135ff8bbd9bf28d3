#include "smoothdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "smoothdiff/error.hpp"
#include "smoothdiff/sampler.hpp"

namespace smoothdiff {

std::string_view to_string(EncoderMode m) { return m == EncoderMode::kIdentity ? "identity" : "block-pool"; }

EncoderMode parse_encoder_mode(std::string_view name) {
  if (name == "identity") return EncoderMode::kIdentity;
  if (name == "block-pool") return EncoderMode::kBlockPool;
  throw Error(ErrorCode::kConfig, "unknown encoder mode '" + std::string(name) + "'");
}

void VLScoreConfig::validate() const {
  if (k < 0 || k % 2 != 0) throw Error(ErrorCode::kConfig, "metric.k must be even and >= 0");
  if (encoder.mode == EncoderMode::kBlockPool && encoder.pool == 0) {
    throw Error(ErrorCode::kConfig, "pool factor must be positive");
  }
}

LatentVideo encode(const LatentVideo& clip, const LatentEncoder& enc) {
  if (enc.mode == EncoderMode::kIdentity) return clip;
  const std::size_t p = enc.pool;
  if (p == 0) throw Error(ErrorCode::kConfig, "pool factor must be positive");
  const auto& dims = clip.frame_dims();
  const std::size_t c = dims[0], h = dims[1], w = dims[2];
  if (h % p != 0 || w % p != 0) {
    throw Error(ErrorCode::kConfig, "frame extents not divisible by pool factor " + std::to_string(p));
  }
  const std::size_t oh = h / p, ow = w / p;
  const double inv = 1.0 / static_cast<double>(p * p);
  std::vector<Tensor> out;
  out.reserve(clip.frame_count());
  for (const auto& frame : clip.frames()) {
    Tensor pooled({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          pooled[(ch * oh + y / p) * ow + x / p] += frame[(ch * h + y) * w + x] * inv;
        }
      }
    }
    out.push_back(std::move(pooled));
  }
  return LatentVideo(std::move(out));
}

LatentVideo encode(const std::vector<Image>& frames, const LatentEncoder& enc) {
  return encode(encode_images(frames), enc);
}

VLScoreResult vl_score(const LatentVideo& latents, const VLScoreConfig& cfg) {
  cfg.validate();
  if (latents.frame_count() < 2) throw Error(ErrorCode::kInsufficientFrames, "VL score needs at least 2 frames");
  const auto& dims = latents.frame_dims();
  if (dims.size() != 3) throw Error(ErrorCode::kShape, "latents must be [C, H, W]");
  const std::size_t c = dims[0], H = dims[1], W = dims[2];
  const std::size_t k = static_cast<std::size_t>(cfg.k);
  if (H <= k || W <= k) throw Error(ErrorCode::kConfig, "latent extents must exceed k");
  const std::size_t h = H - k, w = W - k, half = k / 2;
  const std::size_t n = c * h * w;

  auto crop = [&](const Tensor& frame, std::size_t oi, std::size_t oj, std::vector<double>& out) {
    out.resize(n);
    std::size_t idx = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const double* row = frame.data() + (ch * H + y + oi) * W + oj;
        for (std::size_t x = 0; x < w; ++x) out[idx++] = row[x];
      }
    }
  };

  VLScoreResult result;
  std::vector<double> current, window;
  double total = 0.0;
  for (std::size_t m = 1; m < latents.frame_count(); ++m) {
    crop(latents[m], half, half, current);
    PairScore best{m, -2.0, 0, 0};
    for (std::size_t i = 0; i <= k; ++i) {
      for (std::size_t j = 0; j <= k; ++j) {
        crop(latents[m - 1], i, j, window);
        double s;
        try {
          s = cosine_similarity(current, window);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateInput) throw;
          throw Error(ErrorCode::kDegenerateInput,
                      "all-zero crop in frame pair (" + std::to_string(m - 1) + ", " + std::to_string(m) + ")");
        }
        if (s > best.similarity) best = PairScore{m, s, static_cast<int>(i), static_cast<int>(j)};
      }
    }
    total += best.similarity;
    result.pairs.push_back(best);
  }
  result.score = 100.0 * total / static_cast<double>(latents.frame_count() - 1);
  return result;
}

double mean_pairwise_consistency(const std::vector<Tensor>& embeddings) {
  if (embeddings.size() < 2) throw Error(ErrorCode::kInsufficientFrames, "pairwise consistency needs 2 frames");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < embeddings.size(); ++a) {
    for (std::size_t b = a + 1; b < embeddings.size(); ++b) {
      total += cosine_similarity(embeddings[a], embeddings[b]);
      ++pairs;
    }
  }
  return 100.0 * total / static_cast<double>(pairs);
}

Tensor frame_embedding(const Tensor& frame) {
  if (frame.rank() != 3) throw Error(ErrorCode::kShape, "frames must be [C, H, W]");
  const std::size_t c = frame.dims()[0], h = frame.dims()[1], w = frame.dims()[2];
  constexpr std::size_t kGrid = 4;
  // Block b spans [b*n/4, (b+1)*n/4), widened to one row/column when n < 4.
  auto span = [](std::size_t b, std::size_t n) {
    const std::size_t lo = b * n / kGrid;
    const std::size_t hi = std::max((b + 1) * n / kGrid, lo + 1);
    return std::pair{std::min(lo, n - 1), std::min(hi, n)};
  };

  Tensor emb({c + c * kGrid * kGrid});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = frame.data() + ch * h * w;
    double sum = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) sum += plane[i];
    emb[ch] = sum / static_cast<double>(h * w);
    for (std::size_t by = 0; by < kGrid; ++by) {
      const auto [y0, y1] = span(by, h);
      for (std::size_t bx = 0; bx < kGrid; ++bx) {
        const auto [x0, x1] = span(bx, w);
        double block = 0.0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) block += plane[y * w + x];
        }
        emb[c + (ch * kGrid + by) * kGrid + bx] = block / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return emb;
}

ClipEvaluation evaluate_clip(const LatentVideo& clip, const VLScoreConfig& cfg) {
  ClipEvaluation out;
  out.vl = vl_score(encode(clip, cfg.encoder), cfg);
  std::vector<Tensor> embeddings;
  embeddings.reserve(clip.frame_count());
  for (const auto& frame : clip.frames()) embeddings.push_back(frame_embedding(frame));
  out.pairwise = mean_pairwise_consistency(embeddings);
  return out;
}

}  // namespace smoothdiff
