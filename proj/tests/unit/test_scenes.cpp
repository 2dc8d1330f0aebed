#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "sci/scenes.hpp"

using namespace sci;

TEST(Scenes, StaticSceneHasIdenticalFrames) {
  for (auto kind : {scenes::SceneKind::moving_square, scenes::SceneKind::bouncing_disc, scenes::SceneKind::drifting_texture}) {
    scenes::SyntheticScene spec;
    spec.kind = kind;
    spec.velocity = 0.0;
    const auto v = scenes::synthesize_scene(spec, 4, 16, 16, 1);
    for (int t = 1; t < 4; ++t) EXPECT_TRUE(std::equal(v.frame(t).begin(), v.frame(t).end(), v.frame(0).begin()));
  }
}

TEST(Scenes, SquareMovesAtRequestedSpeed) {
  scenes::SyntheticScene spec;
  spec.velocity = 2.0;
  spec.gradient_background = false;
  spec.size = 0.25;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto v = scenes::synthesize_scene(spec, 6, 48, 48, seed);
    for (int t = 1; t < 6; ++t) {
      const auto a = oracle::centroid(v.frame(t - 1).data(), 48, 48, 0.0);
      const auto b = oracle::centroid(v.frame(t).data(), 48, 48, 0.0);
      EXPECT_NEAR(std::hypot(b[0] - a[0], b[1] - a[1]), 2.0, 1e-6);
    }
  }
}

TEST(Scenes, SuiteCoversBrightnessRange) {
  const auto set = scenes::synthesize_suite(6, 8, 32, 32, 3);
  float lo = 1.0f, hi = 0.0f;
  for (const auto& v : set) {
    for (float x : v.data()) {
      ASSERT_GE(x, 0.0f);
      ASSERT_LE(x, 1.0f);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  EXPECT_LE(lo, 0.02f);
  EXPECT_GE(hi, 0.98f);
}

TEST(Scenes, Deterministic) {
  EXPECT_EQ(scenes::synthesize_suite(3, 4, 16, 16, 9), scenes::synthesize_suite(3, 4, 16, 16, 9));
  EXPECT_NE(scenes::synthesize_suite(1, 4, 16, 16, 9)[0], scenes::synthesize_suite(1, 4, 16, 16, 10)[0]);
}

TEST(Scenes, OverflowThrows) {
  scenes::SyntheticScene spec;
  spec.velocity = 10.0;
  EXPECT_THROW(scenes::synthesize_scene(spec, 8, 16, 16, 1), std::invalid_argument);
  spec = {};
  spec.size = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Scenes, KindNames) {
  EXPECT_EQ(scenes::parse_scene_kind("bouncing-disc"), scenes::SceneKind::bouncing_disc);
  EXPECT_FALSE(scenes::parse_scene_kind("cube").has_value());
}
