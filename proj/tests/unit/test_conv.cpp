#include <gtest/gtest.h>

#include "oracles.hpp"
#include "op_cases.hpp"
#include "sci/ad/ops.hpp"

using namespace sci;
using ad::Tensor;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Conv, Conv3dMatchesDirectLoops) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int ci = opcases::pick(rng, 1, 3), co = opcases::pick(rng, 1, 3);
    const int kd = opcases::pick(rng, 1, 3), kh = opcases::pick(rng, 1, 3), kw = opcases::pick(rng, 1, 3);
    const std::array<int, 3> stride{opcases::pick(rng, 1, 2), opcases::pick(rng, 1, 3), opcases::pick(rng, 1, 3)};
    const std::array<int, 3> pad{opcases::pick(rng, 0, kd / 2), opcases::pick(rng, 0, kh / 2), opcases::pick(rng, 0, kw / 2)};
    const std::array<int, 4> xs{ci, opcases::pick(rng, kd, 5), opcases::pick(rng, kh, 9), opcases::pick(rng, kw, 9)};
    const auto x = opcases::random(rng, {xs[0], xs[1], xs[2], xs[3]});
    const auto w = opcases::random(rng, {co, ci, kd, kh, kw});
    const bool with_bias = rng.uniform() < 0.5;
    const auto b = opcases::random(rng, {co});
    std::array<int, 4> os{};
    const auto expected = oracle::conv3d(values(x), xs, values(w), {co, ci, kd, kh, kw},
                                         with_bias ? values(b) : std::vector<double>{}, stride, pad, &os);
    const auto got = ad::conv3d(x, w, with_bias ? b : Tensor{}, stride, pad);
    ASSERT_EQ(got.shape(), (ad::Shape{os[0], os[1], os[2], os[3]}));
    for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(got.data()[i], expected[i], 1e-12) << "trial " << trial;
  }
}

TEST(Conv, Conv3dLargerChannelsMatchOracle) {
  Rng rng(5);
  const auto x = opcases::random(rng, {16, 8, 16, 16});
  const auto w = opcases::random(rng, {8, 16, 3, 3, 3});
  const auto b = opcases::random(rng, {8});
  const auto expected = oracle::conv3d(values(x), {16, 8, 16, 16}, values(w), {8, 16, 3, 3, 3}, values(b), {1, 2, 2}, {1, 1, 1});
  const auto got = ad::conv3d(x, w, b, {1, 2, 2}, {1, 1, 1});
  for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(got.data()[i], expected[i], 1e-10);
}

TEST(Conv, Conv2dEqualsDepthOneConv3d) {
  Rng rng(8);
  const auto x = opcases::random(rng, {2, 7, 6});
  const auto w = opcases::random(rng, {3, 2, 3, 2});
  const auto b = opcases::random(rng, {3});
  const auto got = ad::conv2d(x, w, b, {2, 1}, {1, 1});
  const auto expected = oracle::conv3d(values(x), {2, 1, 7, 6}, values(w), {3, 2, 1, 3, 2}, values(b), {1, 2, 1}, {0, 1, 1});
  ASSERT_EQ(got.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(got.data()[i], expected[i], 1e-12);
}

TEST(Conv, ChannelMismatchThrows) {
  EXPECT_THROW(ad::conv3d(Tensor::zeros({2, 3, 3, 3}), Tensor::zeros({1, 3, 1, 1, 1}), {}), std::invalid_argument);
}

TEST(Conv, PixelShuffleLayout) {
  const int r = 2;
  std::vector<double> v(8 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  // [C*r*r = 8, H = 1, W = 3] -> [2, 2, 6]
  const auto y = ad::pixel_shuffle(Tensor::from({8, 1, 3}, v), r);
  ASSERT_EQ(y.shape(), (ad::Shape{2, 2, 6}));
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int w = 0; w < 3; ++w) {
          const double expected = v[static_cast<std::size_t>((c * r * r + i * r + j) * 3 + w)];
          EXPECT_EQ(y.data()[static_cast<std::size_t>((c * 2 + i) * 6 + w * r + j)], expected);
        }
}
