#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "smoothdiff/schedule.hpp"
#include "smoothdiff/tensor.hpp"

namespace smoothdiff {

// Conditioning vector. The null condition (all zeros) is the unconditional
// branch used by classifier-free guidance.
struct Condition {
  std::vector<double> values;

  static Condition null(std::size_t width) { return Condition{std::vector<double>(width, 0.0)}; }
  std::size_t width() const noexcept { return values.size(); }
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct DenoiserDims {
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t feature_width = 128;
  std::size_t condition_width = 16;
  int timesteps = 1000;

  std::size_t pixels() const noexcept { return channels * height * width; }
  Extents frame_extents() const { return {channels, height, width}; }
  friend bool operator==(const DenoiserDims&, const DenoiserDims&) = default;
};

// Parameter slots, in checkpoint order.
enum class Param : std::size_t {
  kEncoder1Weight,  // [D, N]
  kEncoder1Bias,    // [D]
  kEncoder2Weight,  // [D, D]
  kEncoder2Bias,    // [D]
  kTemporalGate,    // [D]
  kTimeEmbedding,   // [T, D]
  kConditionProj,   // [D, Cw]
  kDecoder1Weight,  // [D, D]
  kDecoder1Bias,    // [D]
  kDecoder2Weight,  // [N, D]
  kDecoder2Bias,    // [N]
  kOutputSkip,      // [1]
};
inline constexpr std::size_t kParamCount = 12;

std::string_view param_name(Param p);
std::string_view param_name(std::size_t index);

// Ordered list of tensors matching the Param layout. Used for weights,
// gradients and optimizer moments alike.
struct ParameterSet {
  std::array<Tensor, kParamCount> tensors;

  Tensor& operator[](Param p) { return tensors[static_cast<std::size_t>(p)]; }
  const Tensor& operator[](Param p) const { return tensors[static_cast<std::size_t>(p)]; }

  ParameterSet zeros_like() const;
  bool all_finite() const noexcept;
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

// Per-frame MLP noise predictor with neighbour-mean temporal mixing:
//
//   h1 = tanh(W1 x_f + b1 + E[t] + P c)
//   h2 = tanh(W2 h1 + b2)
//   m  = h2 + g * (mean(h2 of f-1, f+1) - h2)
//   y  = W4 tanh(W3 m + b3) + b4 + s x_f
class DenoiserModel {
 public:
  DenoiserModel(DenoiserDims dims, ParameterSet params);

  const DenoiserDims& dims() const noexcept { return dims_; }
  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& params() noexcept { return params_; }

  friend bool operator==(const DenoiserModel&, const DenoiserModel&) = default;

 private:
  DenoiserDims dims_;
  ParameterSet params_;
};

// Weights ~ N(0, 1/fan_in), biases and skip zero, time embeddings small,
// gates 0.5.
DenoiserModel init_model(SeededRng& rng, const DenoiserDims& dims);

NoisePrediction forward(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond);

// Exact gradient of sum(forward(...) * out_grad) with respect to every parameter.
ParameterSet backward(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond,
                      const NoisePrediction& out_grad);

}  // namespace smoothdiff
