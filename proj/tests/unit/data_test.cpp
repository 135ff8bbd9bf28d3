#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "smoothdiff/data.hpp"
#include "smoothdiff/metrics.hpp"
#include "smoothdiff/sampler.hpp"

using namespace smoothdiff;

TEST(GenerateClip, ZeroVelocityGivesIdenticalFrames) {
  SceneSpec spec;
  spec.velocity_x = 0.0;
  const auto clip = generate_clip(spec, SeededRng(1));
  ASSERT_EQ(clip.latents.frame_count(), 8u);
  for (std::size_t m = 1; m < 8; ++m) {
    EXPECT_EQ(clip.latents[m], clip.latents[0]);
    EXPECT_EQ(clip.images[m], clip.images[0]);
  }
}

TEST(GenerateClip, UnitVelocityShiftsOneColumn) {
  SceneSpec spec;  // square, velocity (1, 0)
  spec.channels = 3;
  const auto clip = generate_clip(spec, SeededRng(2));
  const auto& d = clip.latents.frame_dims();
  const std::size_t h = d[1], w = d[2];
  for (std::size_t m = 1; m < clip.latents.frame_count(); ++m) {
    const auto& prev = clip.latents[m - 1];
    const auto& cur = clip.latents[m];
    for (std::size_t c = 0; c < d[0]; ++c)
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 1; x < w; ++x) EXPECT_EQ(cur[(c * h + y) * w + x], prev[(c * h + y) * w + x - 1]);
        EXPECT_EQ(cur[(c * h + y) * w], prev[(c * h + y) * w]);  // background column
      }
  }
}

TEST(GenerateClip, LatentsLieInRangeAndMatchImages) {
  SceneSpec spec;
  spec.shape = ShapeKind::kDisc;
  spec.texture = 0.9;
  const auto clip = generate_clip(spec, SeededRng(3));
  for (const auto& f : clip.latents.frames())
    for (double v : f.values()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  EXPECT_EQ(decode_frames(clip.latents), clip.images);
}

TEST(GenerateClip, SeedDeterminesTexture) {
  const SceneSpec spec;
  EXPECT_EQ(generate_clip(spec, SeededRng(4)).latents, generate_clip(spec, SeededRng(4)).latents);
  EXPECT_NE(generate_clip(spec, SeededRng(4)).latents, generate_clip(spec, SeededRng(5)).latents);
}

TEST(GenerateClip, SinusoidalStepBound) {
  SceneSpec spec;
  spec.motion = MotionKind::kSinusoidal;
  spec.amplitude = 4.0;
  spec.period = 8.0;
  spec.start_x = 5;
  spec.frames = 16;
  spec.width = 20;
  EXPECT_NO_THROW(generate_clip(spec, SeededRng(6)));
  const int bound = static_cast<int>(std::ceil(2.0 * std::numbers::pi * spec.amplitude / spec.period));
  for (int m = 1; m < spec.frames; ++m) {
    const double exact = spec.amplitude * (std::sin(2.0 * std::numbers::pi * m / spec.period) -
                                           std::sin(2.0 * std::numbers::pi * (m - 1) / spec.period));
    const int step = std::abs(shape_position(spec, m).x - shape_position(spec, m - 1).x);
    EXPECT_LE(step, bound);
    EXPECT_LE(std::abs(step - std::abs(exact)), 1.0);
  }
}

TEST(GenerateClip, ExitingShapeNamesFrame) {
  SceneSpec spec;
  spec.velocity_x = 2.0;  // x = 1 + 2m, size 6, width 16: frame 5 ends at column 17
  try {
    generate_clip(spec, SeededRng(7));
    FAIL() << "expected a spec error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpec);
    EXPECT_NE(std::string(e.what()).find("frame 5"), std::string::npos) << e.what();
  }
}

TEST(SceneSpec, Validation) {
  SceneSpec spec;
  spec.channels = 2;
  EXPECT_ERROR_CODE(spec.validate(), ErrorCode::kSpec);
  spec = {};
  spec.size = 0;
  EXPECT_ERROR_CODE(spec.validate(), ErrorCode::kSpec);
  spec = {};
  spec.motion = MotionKind::kSinusoidal;
  spec.period = 0.0;
  EXPECT_ERROR_CODE(spec.validate(), ErrorCode::kSpec);
  EXPECT_ERROR_CODE(parse_shape_kind("triangle"), ErrorCode::kConfig);
  EXPECT_EQ(parse_motion_kind(to_string(MotionKind::kSinusoidal)), MotionKind::kSinusoidal);
  EXPECT_EQ(parse_shape_kind(to_string(ShapeKind::kDisc)), ShapeKind::kDisc);
}

// Ground-truth integer motion is fully compensated by the sliding window.
TEST(GenerateClip, IntegerMotionScoresHundred) {
  SceneSpec spec;
  spec.velocity_x = 2.0;
  spec.velocity_y = 1.0;
  spec.start_x = 2;
  spec.start_y = 2;
  spec.frames = 6;
  spec.width = 24;
  spec.height = 16;
  const auto clip = generate_clip(spec, SeededRng(8));
  const auto r = vl_score(clip.latents, {.k = 4});
  EXPECT_NEAR(r.score, 100.0, 1e-9);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.offset_i, 1);
    EXPECT_EQ(p.offset_j, 0);
  }
}

TEST(PromptTable, DistinctVectorsAndNullPrompt) {
  const auto t = PromptTable::build({"a", "b", "c"}, 8, 3);
  EXPECT_EQ(t.width(), 8u);
  // The null prompt is always present but not listed.
  EXPECT_EQ(t.names(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(t.contains(""));
  std::set<std::vector<double>> seen;
  for (const auto& name : {"a", "b", "c"}) seen.insert(t.at(name).values);
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(t.at("").values, std::vector<double>(8, 0.0));
  EXPECT_EQ(PromptTable::build({"a", "b", "c"}, 8, 3).at("b"), t.at("b"));
  EXPECT_NE(PromptTable::build({"a"}, 8, 4).at("a"), t.at("a"));
}

TEST(PromptTable, UnknownNameListsAvailable) {
  const auto t = PromptTable::build({"sunrise", "dusk"}, 4, 0);
  try {
    t.at("noon");
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sunrise"), std::string::npos);
    EXPECT_NE(msg.find("dusk"), std::string::npos);
  }
}

TEST(PromptTable, JsonRoundTrip) {
  const auto t = PromptTable::build({"x", "y"}, 5, 11);
  const auto back = PromptTable::from_json(t.to_json());
  EXPECT_EQ(back.entries(), t.entries());
  EXPECT_ERROR_CODE(PromptTable::from_json("{not json"), ErrorCode::kFormat);
}
