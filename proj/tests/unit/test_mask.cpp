#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "traces.hpp"
#include "sci/mask.hpp"
#include "sci/random.hpp"

using namespace sci;
using mask::LearnableMask;

namespace {

std::vector<std::int32_t> column_units(const mask::MaskCube& m, int u = 0, int v = 0) {
  std::vector<std::int32_t> out;
  for (int t = 0; t < m.frames(); ++t) out.push_back(m.units(t, u, v));
  return out;
}

std::vector<std::int32_t> structural(std::vector<double> column, int lambda) {
  const int frames = static_cast<int>(column.size());
  return column_units(mask::structuralize(LearnableMask(frames, 1, 1, std::move(column)), lambda));
}

}  // namespace

TEST(Mask, GoldenTraceTwoFramesTwoBits) {
  EXPECT_EQ(structural({0.5, 0.75}, 2), (std::vector<std::int32_t>{2, 2}));
}

class HandTrace : public ::testing::TestWithParam<traces::Trace> {};

TEST_P(HandTrace, Reproduces) {
  const auto& t = GetParam();
  EXPECT_EQ(structural(t.mprime, t.lambda), t.units);
}

INSTANTIATE_TEST_SUITE_P(Mask, HandTrace, ::testing::ValuesIn(traces::hand()));

TEST(Mask, MatchesLiteralAlgorithmWhenNoRepairIsNeeded) {
  Rng rng(11);
  int compared = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const int frames = 2 + static_cast<int>(rng.below(15));
    const int lambda = 2 + static_cast<int>(rng.below(7));
    std::vector<double> column(frames);
    for (double& v : column) v = rng.uniform();
    const auto expected = oracle::structural_column(column, lambda);
    const double L = std::ldexp(1.0, lambda);
    bool on_grid = true;
    for (double v : expected) on_grid = on_grid && v >= 0.0 && v <= 1.0 - 1.0 / L;
    if (!on_grid) continue;
    const auto got = structural(column, lambda);
    for (int k = 0; k < frames; ++k) ASSERT_EQ(got[k], static_cast<std::int32_t>(std::lround(expected[k] * L)));
    ++compared;
  }
  EXPECT_GT(compared, 4000);
}

TEST(Mask, StructuralInvariantsOnRandomInputs) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int frames = 2 + static_cast<int>(rng.below(15));
    const int lambda = 1 + static_cast<int>(rng.below(8));
    const auto m = mask::structuralize(LearnableMask::uniform_random(frames, 3, 4, rng.below(1u << 30)), lambda);
    const auto report = mask::validate(m);
    ASSERT_TRUE(report.ok()) << "frames " << frames << " lambda " << lambda;
    for (int u = 0; u < 3; ++u)
      for (int v = 0; v < 4; ++v) EXPECT_EQ(m.column_units(u, v), m.scale());
  }
}

TEST(Mask, DiscretizeStaysOnGridWithoutSumConstraint) {
  const auto m = mask::discretize(LearnableMask(2, 1, 1, {1.0, 1.0}), 2);
  EXPECT_EQ(column_units(m), (std::vector<std::int32_t>{3, 3}));
  EXPECT_FALSE(m.structural());
}

TEST(Mask, MultiBitNeedsTwoFrames) {
  EXPECT_THROW(mask::structuralize(LearnableMask(1, 1, 1, {0.5}), 2), std::invalid_argument);
  EXPECT_NO_THROW(mask::structuralize(LearnableMask(1, 1, 1, {0.5}), 1));
}

TEST(Mask, LearnableRejectsOutOfRange) {
  EXPECT_THROW(LearnableMask(1, 1, 2, {0.5, 1.5}), std::invalid_argument);
  EXPECT_THROW(LearnableMask(1, 1, 2, {0.5}), ShapeError);
}

TEST(Mask, ValidateFindsSumViolation) {
  const mask::MaskCube bad(2, 1, 1, 2, {1, 1}, true);
  const auto report = mask::validate(bad);
  EXPECT_EQ(report.sum_violations(), 1u);
  EXPECT_EQ(report.grid_violations(), 0u);
}

TEST(Mask, RandomBinaryDeterministicAndBalanced) {
  const auto a = mask::random_binary(8, 64, 64, 0.5, 7);
  EXPECT_EQ(a, mask::random_binary(8, 64, 64, 0.5, 7));
  double mean = 0.0;
  for (auto u : a.units()) mean += u;
  mean /= static_cast<double>(a.units().size());
  EXPECT_NEAR(mean, 0.5, 0.02);
}

TEST(Mask, EffectiveLevelsStructuralIsFullRange) {
  const auto m = mask::random_structural(8, 16, 16, 4, 1);
  for (auto l : mask::effective_levels(m, 8)) EXPECT_EQ(l, 256);
}

TEST(Mask, EffectiveLevelsWithAperture) {
  const mask::MaskCube m(8, 1, 1, 1, {1, 1, 1, 1, 0, 0, 0, 0}, false);
  EXPECT_EQ(mask::effective_levels(m, 8, 0.25)[0], 64);
  EXPECT_EQ(mask::effective_levels(m, 8)[0], 64);
}

TEST(Mask, DmdRoundTrip) {
  const auto m = mask::random_structural(4, 5, 11, 3, 9);
  const auto planes = mask::to_dmd_planes(m);
  EXPECT_EQ(planes.plane_count(), 12u);
  EXPECT_EQ(planes.row_bytes(), 2u);
  EXPECT_EQ(mask::from_dmd_planes(planes, true), m);
  const auto path = std::filesystem::temp_directory_path() / "sci_unit_mask.dmd";
  mask::export_dmd(m, path);
  EXPECT_EQ(mask::from_dmd_planes(mask::import_dmd(path), true), m);
}

TEST(Mask, SaveLoadRoundTrip) {
  const auto m = mask::random_structural(3, 4, 4, 5, 2);
  const auto path = std::filesystem::temp_directory_path() / "sci_unit_mask.scit";
  mask::save_mask(path, m);
  EXPECT_EQ(mask::load_mask(path), m);
}
