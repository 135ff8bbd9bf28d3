#include <cmath>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "oracles.hpp"
#include "smoothdiff/denoiser.hpp"

using namespace smoothdiff;

namespace {

DenoiserDims small_dims() { return DenoiserDims{2, 3, 3, 6, 3, 5}; }

Condition random_condition(SeededRng& rng, std::size_t width) {
  Condition c;
  for (std::size_t i = 0; i < width; ++i) c.values.push_back(rng.normal());
  return c;
}

// Randomizes every parameter so no gradient is trivially zero.
DenoiserModel random_model(SeededRng& rng, const DenoiserDims& d) {
  DenoiserModel m = init_model(rng, d);
  for (auto& t : m.params().tensors)
    for (auto& v : t.values()) v += 0.3 * rng.normal();
  return m;
}

double weighted_sum(const NoisePrediction& y, const NoisePrediction& g) {
  double acc = 0.0;
  for (std::size_t f = 0; f < y.frame_count(); ++f) acc += dot(y[f], g[f]);
  return acc;
}

}  // namespace

TEST(Denoiser, ForwardDeterministicAndShapePreserving) {
  SeededRng rng(1);
  const auto d = small_dims();
  const auto model = init_model(rng, d);
  const auto x = oracle::random_video(rng, 4, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const auto a = forward(model, x, 3, c);
  EXPECT_TRUE(a.same_shape(x));
  EXPECT_EQ(a, forward(model, x, 3, c));
}

TEST(Denoiser, GateOffIsolatesFrames) {
  SeededRng rng(2);
  const auto d = small_dims();
  auto model = random_model(rng, d);
  for (auto& g : model.params()[Param::kTemporalGate].values()) g = 0.0;
  auto x = oracle::random_video(rng, 4, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const auto before = forward(model, x, 2, c);
  x[2][0] += 1.0;
  const auto after = forward(model, x, 2, c);
  EXPECT_EQ(before[0], after[0]);
  EXPECT_EQ(before[1], after[1]);
  EXPECT_EQ(before[3], after[3]);
  EXPECT_NE(before[2], after[2]);
}

TEST(Denoiser, GateOnCouplesNeighbours) {
  SeededRng rng(3);
  const auto d = small_dims();
  const auto model = random_model(rng, d);
  auto x = oracle::random_video(rng, 4, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const auto before = forward(model, x, 2, c);
  x[2][1] += 1e-3;
  const auto after = forward(model, x, 2, c);
  EXPECT_GT(l2_norm(after[1] - before[1]), 0.0);
  EXPECT_EQ(before[0], after[0]);  // two frames away
}

TEST(Denoiser, GateOffPermutationEquivariant) {
  SeededRng rng(4);
  const auto d = small_dims();
  auto model = random_model(rng, d);
  for (auto& g : model.params()[Param::kTemporalGate].values()) g = 0.0;
  const auto x = oracle::random_video(rng, 4, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<Tensor> shuffled;
  for (auto p : perm) shuffled.push_back(x[p]);
  const auto y = forward(model, x, 4, c);
  const auto ys = forward(model, LatentVideo(shuffled), 4, c);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(ys[i], y[perm[i]]);
}

TEST(Denoiser, InputContract) {
  SeededRng rng(5);
  const auto d = small_dims();
  const auto model = init_model(rng, d);
  const auto x = oracle::random_video(rng, 2, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  EXPECT_ERROR_CODE(forward(model, x, 0, c), ErrorCode::kTimestep);
  EXPECT_ERROR_CODE(forward(model, x, 6, c), ErrorCode::kTimestep);
  EXPECT_ERROR_CODE(forward(model, x, 1, Condition::null(2)), ErrorCode::kShape);
  EXPECT_ERROR_CODE(forward(model, LatentVideo::zeros(2, {1, 3, 3}), 1, c), ErrorCode::kShape);
  EXPECT_ERROR_CODE(backward(model, x, 1, c, LatentVideo::zeros(3, d.frame_extents())), ErrorCode::kShape);
}

TEST(Denoiser, InitContract) {
  SeededRng a(6), b(6);
  const auto d = small_dims();
  EXPECT_EQ(init_model(a, d), init_model(b, d));
  auto bad = d;
  bad.feature_width = 0;
  EXPECT_ERROR_CODE(init_model(a, bad), ErrorCode::kConfig);
  bad = d;
  bad.condition_width = 0;
  EXPECT_ERROR_CODE(init_model(a, bad), ErrorCode::kConfig);
  const auto m = init_model(a, d);
  for (double g : m.params()[Param::kTemporalGate].values()) EXPECT_EQ(g, 0.5);
}

TEST(Denoiser, InitOutputMagnitude) {
  SeededRng rng(7);
  const DenoiserDims d;
  const auto model = init_model(rng, d);
  const auto x = oracle::random_video(rng, 8, d.frame_extents());
  const auto y = forward(model, x, 500, Condition::null(d.condition_width));
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& f : y.frames()) {
    sq += squared_norm(f);
    n += f.size();
  }
  const double rms = std::sqrt(sq / static_cast<double>(n));
  EXPECT_GT(rms, 0.01);
  EXPECT_LT(rms, 10.0);
}

TEST(Denoiser, ZeroOutputGradientGivesZeroGradients) {
  SeededRng rng(8);
  const auto d = small_dims();
  const auto model = random_model(rng, d);
  const auto x = oracle::random_video(rng, 3, d.frame_extents());
  const auto g = backward(model, x, 2, random_condition(rng, d.condition_width), LatentVideo::zeros(3, d.frame_extents()));
  for (const auto& t : g.tensors)
    for (double v : t.values()) EXPECT_EQ(v, 0.0);
}

TEST(Denoiser, GradientLinearInOutputGradient) {
  SeededRng rng(9);
  const auto d = small_dims();
  const auto model = random_model(rng, d);
  const auto x = oracle::random_video(rng, 3, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const auto og = oracle::random_video(rng, 3, d.frame_extents());
  LatentVideo scaled = og;
  for (std::size_t f = 0; f < 3; ++f) scaled[f] *= 2.5;
  const auto g1 = backward(model, x, 4, c, og);
  const auto g2 = backward(model, x, 4, c, scaled);
  for (std::size_t p = 0; p < kParamCount; ++p)
    for (std::size_t i = 0; i < g1.tensors[p].size(); ++i)
      EXPECT_NEAR(g2.tensors[p][i], 2.5 * g1.tensors[p][i], 1e-12 * (1 + std::abs(g2.tensors[p][i])));
}

class DenoiserGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(DenoiserGradient, MatchesCentralDifferences) {
  SeededRng rng(100 + GetParam());
  const std::size_t frames = 1 + GetParam() % 4;
  const auto d = small_dims();
  auto model = random_model(rng, d);
  const auto x = oracle::random_video(rng, frames, d.frame_extents());
  const auto c = random_condition(rng, d.condition_width);
  const int t = 1 + static_cast<int>(GetParam() % 5);
  const auto og = oracle::random_video(rng, frames, d.frame_extents());

  const auto analytic = backward(model, x, t, c, og);
  for (std::size_t p = 0; p < kParamCount; ++p) {
    auto values = model.params().tensors[p].values();
    const auto numeric = oracle::central_difference(values, [&] { return weighted_sum(forward(model, x, t, c), og); });
    EXPECT_LE(oracle::relative_error(analytic.tensors[p].values(), numeric), 1e-5) << param_name(p);
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, DenoiserGradient, ::testing::Range<std::size_t>(0, 8));

TEST(Denoiser, ParameterNamesAreUnique) {
  for (std::size_t i = 0; i < kParamCount; ++i)
    for (std::size_t j = i + 1; j < kParamCount; ++j) EXPECT_NE(param_name(i), param_name(j));
}
