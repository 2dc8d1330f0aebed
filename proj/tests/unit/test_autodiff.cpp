#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "op_cases.hpp"
#include "sci/ad/checkpoint.hpp"
#include "sci/ad/grad_check.hpp"
#include "sci/ad/ops.hpp"
#include "sci/ad/optim.hpp"

using namespace sci;
using ad::Tensor;

class OpGradient : public ::testing::TestWithParam<opcases::OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  Rng rng(derive_seed(17, std::hash<std::string>{}(GetParam().name)));
  for (int i = 0; i < 10; ++i) {
    const auto inst = GetParam().make(rng);
    const auto report = ad::grad_check(inst.fn, inst.inputs);
    ASSERT_TRUE(report.passed()) << GetParam().name << " instance " << i << ": rel " << report.max_relative_error
                                 << " at " << report.worst_input;
  }
}

INSTANTIATE_TEST_SUITE_P(Autodiff, OpGradient, ::testing::ValuesIn(opcases::all()),
                         [](const auto& info) { return info.param.name; });

TEST(Autodiff, StraightThroughForwardsMapAndPassesGradient) {
  auto x = Tensor::from({3}, {0.2, 0.6, 0.9}, true);
  const auto y = ad::straight_through(
      x, [](std::span<const double> v) { return std::vector<double>{std::round(v[0]), std::round(v[1]), std::round(v[2])}; },
      "round");
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{0, 1, 1}));
  const auto w = Tensor::from({3}, {2.0, -1.0, 0.5});
  ad::sum(ad::mul(y, w)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{2.0, -1.0, 0.5}));
}

TEST(Autodiff, StraightThroughBypassIsIdentity) {
  const auto x = Tensor::from({2}, {0.2, 0.7});
  ad::StraightThroughBypass bypass;
  const auto y = ad::straight_through(x, [](std::span<const double>) { return std::vector<double>{9, 9}; }, "const");
  EXPECT_EQ(y.data()[0], 0.2);
  EXPECT_EQ(y.data()[1], 0.7);
}

TEST(Autodiff, BackwardNeedsScalar) {
  auto x = Tensor::from({2}, {1, 2}, true);
  EXPECT_THROW(ad::scale(x, 2.0).backward(), std::exception);
}

TEST(Autodiff, SharedSubgraphAccumulates) {
  auto x = Tensor::from({1}, {3.0}, true);
  const auto y = ad::mul(x, x);
  ad::sum(ad::add(y, y)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Autodiff, NoGradGuardSkipsRecording) {
  auto x = Tensor::from({1}, {3.0}, true);
  ad::NoGradGuard guard;
  const auto y = ad::mul(x, x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autodiff, SuffixBroadcastShapeError) {
  const auto a = Tensor::zeros({2, 3});
  EXPECT_THROW(ad::add(a, Tensor::zeros({2})), std::invalid_argument);
}

TEST(Autodiff, CosineScheduleEndpoints) {
  const ad::LrSchedule s{1e-4, 1e-5, 101};
  EXPECT_DOUBLE_EQ(s.at(0), 1e-4);
  EXPECT_NEAR(s.at(100), 1e-5, 1e-20);
  EXPECT_NEAR(s.at(50), 5.5e-5, 1e-18);
}

TEST(Autodiff, AdamFirstStepMovesByLearningRate) {
  auto p = Tensor::from({2}, {0.5, 0.5}, true);
  p.mutable_grad()[0] = 3.0;
  p.mutable_grad()[1] = -0.01;
  ad::AdamState state;
  std::vector<Tensor> params{p};
  ad::adam_step(params, state, 0.1);
  // Bias-corrected first step is lr * g / (|g| + eps').
  EXPECT_NEAR(p.data()[0], 0.4, 1e-7);
  EXPECT_NEAR(p.data()[1], 0.6, 1e-5);
}

TEST(Autodiff, AdamClampsMaskParameters) {
  auto p = Tensor::from({2}, {0.01, 0.99}, true);
  p.mutable_grad()[0] = 1.0;
  p.mutable_grad()[1] = -1.0;
  ad::AdamState state;
  std::vector<Tensor> params{p};
  const bool clamp[] = {true};
  ad::adam_step(params, state, 0.5, clamp);
  EXPECT_EQ(p.data()[0], 0.0);
  EXPECT_EQ(p.data()[1], 1.0);
}

TEST(Autodiff, CheckpointRoundTripIsBitExact) {
  ad::Checkpoint ck;
  ck.tensors.emplace_back("a", Tensor::from({2, 2}, {0.1, -1e-300, 3.14159, std::nextafter(1.0, 2.0)}));
  ck.tensors.emplace_back("b", Tensor::from({1}, {42.0}));
  ad::AdamState adam;
  adam.step = 7;
  adam.first = {{0.1, 0.2, 0.3, 0.4}, {1.0}};
  adam.second = {{1e-9, 2e-9, 3e-9, 4e-9}, {2.0}};
  ck.adam = adam;
  ck.metadata = R"({"note":"x"})";
  const auto path = std::filesystem::temp_directory_path() / "sci_unit.ckpt";
  ad::save_checkpoint(path, ck);
  const auto back = ad::load_checkpoint(path);
  ASSERT_EQ(back.tensors.size(), 2u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.find("a")->data()[i], ck.tensors[0].second.data()[i]);
  EXPECT_EQ(back.find("a")->shape(), (ad::Shape{2, 2}));
  ASSERT_TRUE(back.adam.has_value());
  EXPECT_EQ(back.adam->step, 7);
  EXPECT_EQ(back.adam->first, adam.first);
  EXPECT_EQ(back.adam->second, adam.second);
  EXPECT_NE(back.metadata.find("note"), std::string::npos);
}

TEST(Autodiff, CheckFiniteFlagsNan) {
  EXPECT_THROW(ad::check_finite(Tensor::from({1}, {std::nan("")}), "t"), std::domain_error);
}
