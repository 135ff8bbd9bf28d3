#pragma once

#include <string_view>
#include <vector>

#include "smoothdiff/image.hpp"
#include "smoothdiff/schedule.hpp"

namespace smoothdiff {

enum class EncoderMode { kIdentity, kBlockPool };

std::string_view to_string(EncoderMode m);
EncoderMode parse_encoder_mode(std::string_view name);

// Stand-in for a learned latent encoder: either pass-through or averaging
// of non-overlapping pool x pool blocks per channel.
struct LatentEncoder {
  EncoderMode mode = EncoderMode::kIdentity;
  std::size_t pool = 2;
};

struct VLScoreConfig {
  int k = 8;  // window slack; (k + 1)^2 offsets are searched
  LatentEncoder encoder;

  void validate() const;
};

LatentVideo encode(const LatentVideo& clip, const LatentEncoder& enc);
LatentVideo encode(const std::vector<Image>& frames, const LatentEncoder& enc);

struct PairScore {
  std::size_t frame = 0;  // the later frame of the pair (m, paired with m - 1)
  double similarity = 0.0;
  int offset_i = 0;  // argmax window offset in frame m - 1
  int offset_j = 0;
};

struct VLScoreResult {
  double score = 0.0;  // 100 x mean pair similarity
  std::vector<PairScore> pairs;
};

// Sliding-window latent smoothness score. For each consecutive pair the
// current frame is cropped centrally to h x w (extents minus k); the window
// slides over the previous frame at offsets [0, k]^2 and the best cosine
// similarity is kept. Ties resolve to the first offset in row-major order.
VLScoreResult vl_score(const LatentVideo& latents, const VLScoreConfig& cfg);

// 100 x mean cosine similarity over all unordered pairs of embeddings.
double mean_pairwise_consistency(const std::vector<Tensor>& embeddings);

// Channel-wise global means followed by per-channel 4 x 4 block means.
Tensor frame_embedding(const Tensor& frame);

struct ClipEvaluation {
  VLScoreResult vl;
  double pairwise = 0.0;
};

// Encodes the clip, then reports both scores.
ClipEvaluation evaluate_clip(const LatentVideo& clip, const VLScoreConfig& cfg);

}  // namespace smoothdiff
