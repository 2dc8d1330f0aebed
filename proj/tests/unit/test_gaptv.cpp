#include <gtest/gtest.h>

#include "sci/gaptv.hpp"
#include "sci/metrics.hpp"
#include "sci/scenes.hpp"
#include "sci/sensor.hpp"

using namespace sci;

TEST(GapTv, TotalVariationOfStep) {
  // 1 x 2 x 3 frame [[0, 0, 1], [0, 0, 1]]: two horizontal jumps of 1.
  const std::vector<double> x{0, 0, 1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(gaptv::total_variation(x, 1, 2, 3, false), 2.0);
  const std::vector<double> y{0, 0, 1, 1};  // two frames of 1 x 2
  EXPECT_DOUBLE_EQ(gaptv::total_variation(y, 2, 1, 2, true), 2.0);
}

TEST(GapTv, DenoiserEnergyNeverIncreases) {
  const auto scene = scenes::synthesize_scene({}, 2, 16, 16, 3);
  std::vector<double> v(scene.data().begin(), scene.data().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.1 * ((i * 7919) % 13 / 13.0 - 0.5);
  for (double weight : {0.02, 0.2, 2.0}) {
    gaptv::TvTrace trace;
    gaptv::tv_denoise(v, 2, 16, 16, weight, 30, false, &trace);
    ASSERT_EQ(trace.energies.size(), 31u);
    for (std::size_t k = 1; k < trace.energies.size(); ++k) EXPECT_LE(trace.energies[k], trace.energies[k - 1]);
    EXPECT_LT(trace.energies.back(), trace.energies.front());
  }
}

TEST(GapTv, ResidualIsMonotone) {
  scenes::SyntheticScene spec;
  const auto video = scenes::synthesize_scene(spec, 8, 32, 32, 4);
  const auto m = mask::random_structural(8, 32, 32, 4, 5);
  const auto y = sensor::encode(video, m, {});
  for (bool accelerate : {false, true}) {
    gaptv::GapTvConfig cfg;
    cfg.iterations = 60;
    cfg.accelerate = accelerate;
    gaptv::GapTvTrace trace;
    gaptv::gap_tv_decode(y, m, cfg, 1.0, &trace);
    ASSERT_EQ(trace.residuals.size(), 60u);
    for (std::size_t k = 1; k < trace.residuals.size(); ++k) EXPECT_LE(trace.residuals[k], trace.residuals[k - 1] + 1e-6);
  }
}

TEST(GapTv, MovingSquareAbove25dB) {
  const auto videos = scenes::synthesize_dataset({}, 3, 8, 32, 32, 12);
  const auto m = mask::random_structural(8, 32, 32, 4, 6);
  for (const auto& video : videos) {
    const auto rec = gaptv::gap_tv_decode(sensor::encode(video, m, {}), m);
    EXPECT_GE(metrics::psnr(rec, video).mean, 25.0);
  }
}

TEST(GapTv, SingleFrameIdentityMaskReturnsMeasurement) {
  scenes::SyntheticScene spec;
  spec.kind = scenes::SceneKind::drifting_texture;
  const auto video = scenes::synthesize_scene(spec, 1, 32, 32, 2);
  const mask::MaskCube identity(1, 32, 32, 1, std::vector<std::int32_t>(32 * 32, 1), false);
  gaptv::GapTvConfig cfg;
  cfg.iterations = 20;
  cfg.tv_weight = 0.005;
  const auto rec = gaptv::gap_tv_decode(sensor::encode(video, identity, {}), identity, cfg);
  EXPECT_GE(metrics::psnr(rec, video).mean, 40.0);
}

TEST(GapTv, ConfigValidation) {
  gaptv::GapTvConfig cfg;
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.tv_weight = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(GapTv, GeometryMismatchThrows) {
  const auto m = mask::random_structural(4, 8, 8, 2, 1);
  EXPECT_THROW(gaptv::gap_tv_decode(Image(8, 9), m), ShapeError);
}
