#include <gtest/gtest.h>

#include <algorithm>

#include "sci/metrics.hpp"

using namespace sci;

TEST(Metrics, PsnrOfKnownError) {
  const VideoCube a(2, 4, 4, 0.5f);
  const VideoCube b(2, 4, 4, 0.6f);
  const auto s = metrics::psnr(a, b);
  ASSERT_EQ(s.per_frame.size(), 2u);
  EXPECT_NEAR(s.mean, 20.0, 1e-5);
}

TEST(Metrics, PsnrCapsExactMatch) {
  const VideoCube a(1, 3, 3, 0.25f);
  EXPECT_EQ(metrics::psnr(a, a).mean, metrics::kPsnrCap);
}

TEST(Metrics, PsnrShapeMismatch) {
  EXPECT_THROW(metrics::psnr(VideoCube(1, 2, 2), VideoCube(1, 2, 3)), ShapeError);
}

TEST(Metrics, SsimIdenticalIsOne) {
  VideoCube a(2, 16, 16);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = static_cast<float>((i * 37 % 101) / 100.0);
  EXPECT_NEAR(metrics::ssim(a, a).mean, 1.0, 1e-12);
}

TEST(Metrics, SsimDropsWithNoise) {
  VideoCube a(1, 16, 16), b(1, 16, 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = static_cast<float>((i % 16) / 15.0);
    b.data()[i] = a.data()[i] + ((i * 13) % 7 == 0 ? 0.3f : 0.0f);
  }
  const double s = metrics::ssim(a, b).mean;
  EXPECT_LT(s, 0.99);
  EXPECT_GT(s, 0.0);
}

TEST(Metrics, SsimNeedsWindow) {
  EXPECT_THROW(metrics::ssim(VideoCube(1, 8, 8), VideoCube(1, 8, 8)), std::invalid_argument);
}

TEST(Metrics, DynamicRangeCountsLevels) {
  VideoCube ref(1, 1, 256), rec(1, 1, 256);
  for (int v = 0; v < 256; ++v) {
    ref.at(0, 0, v) = static_cast<float>(v / 255.0);
    rec.at(0, 0, v) = static_cast<float>((v / 4) * 4 / 255.0);
  }
  const auto r = metrics::dynamic_range_report(rec, ref, 8);
  EXPECT_EQ(r.reference_levels, 256u);
  EXPECT_EQ(r.reconstructed_levels, 64u);
  std::size_t pixels = 0;
  for (const auto& d : r.deciles) pixels += d.pixels;
  EXPECT_EQ(pixels, 256u);
  EXPECT_NEAR(r.mean_abs_level_error, 1.5, 1e-12);
  const auto csv = r.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Metrics, QualityAveragesVideos) {
  const std::vector<VideoCube> refs{VideoCube(1, 11, 11, 0.5f), VideoCube(1, 11, 11, 0.5f)};
  const std::vector<VideoCube> recs{VideoCube(1, 11, 11, 0.6f), VideoCube(1, 11, 11, 0.51f)};
  const auto q = metrics::evaluate_quality(recs, refs);
  EXPECT_EQ(q.videos, 2u);
  EXPECT_NEAR(q.psnr.mean, 30.0, 1e-4);
  EXPECT_NE(q.to_json().find("psnr"), std::string::npos);
}
