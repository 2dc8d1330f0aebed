#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "op_cases.hpp"
#include "res2former_count.hpp"
#include "sci/ad/ops.hpp"
#include "sci/res2former.hpp"

using namespace sci;
using ad::Tensor;

TEST(Res2former, ForwardPreservesShape) {
  const net::Res2former net(net::Res2formerConfig::toy(), 1);
  Rng rng(2);
  const auto y = net.forward(opcases::random(rng, {8, 32, 32}, 0.0, 1.0));
  EXPECT_EQ(y.shape(), (ad::Shape{8, 32, 32}));
}

TEST(Res2former, StrideTwoForwardPreservesShape) {
  auto cfg = net::Res2formerConfig::toy();
  cfg.embed_stride = 2;
  const net::Res2former net(cfg, 1);
  Rng rng(2);
  EXPECT_EQ(net.forward(opcases::random(rng, {8, 32, 32}, 0.0, 1.0)).shape(), (ad::Shape{8, 32, 32}));
}

TEST(Res2former, AttentionRowsSumToOne) {
  const net::Res2former net(net::Res2formerConfig::toy(8, 16, 16), 3);
  Rng rng(4);
  net::AttentionTrace trace;
  net.forward(opcases::random(rng, {8, 16, 16}, 0.0, 1.0), {}, &trace);
  ASSERT_FALSE(trace.maps.empty());
  for (const auto& m : trace.maps) {
    const int b = m.dim(2);
    for (std::size_t row = 0; row < m.numel() / b; ++row) {
      double s = 0.0;
      for (int j = 0; j < b; ++j) s += m.data()[row * b + j];
      ASSERT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Res2former, TemporalAttentionIsSpatiallyEquivariant) {
  const int c = 8, frames = 5, h = 3, w = 4;
  const auto weights = net::make_tsa(c, 9);
  Rng rng(10);
  const auto x = opcases::random(rng, {c, frames, h, w});
  std::vector<int> perm(h * w);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = h * w - 1; i > 0; --i) std::swap(perm[i], perm[opcases::pick(rng, 0, i)]);
  auto permute_space = [&](const Tensor& t) {
    std::vector<double> out(t.numel());
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t row = 0; row < t.numel() / plane; ++row)
      for (std::size_t p = 0; p < plane; ++p) out[row * plane + p] = t.data()[row * plane + static_cast<std::size_t>(perm[p])];
    return Tensor::from(t.shape(), out);
  };
  const auto a = permute_space(net::temporal_attention(x, weights, 2));
  const auto b = net::temporal_attention(permute_space(x), weights, 2);
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(Res2former, AttentionOnlyMixesFrames) {
  const auto weights = net::make_tsa(4, 1);
  Rng rng(3);
  auto x = opcases::random(rng, {4, 3, 2, 2});
  const auto base = net::temporal_attention(x, weights, 2);
  x.mutable_data()[0] += 1.0;  // channel 0, frame 0, position (0,0)
  const auto moved = net::temporal_attention(x, weights, 2);
  for (int ch = 0; ch < 4; ++ch)
    for (int t = 0; t < 3; ++t)
      for (int p = 1; p < 4; ++p) {
        const std::size_t i = (static_cast<std::size_t>(ch) * 3 + t) * 4 + p;
        EXPECT_EQ(base.data()[i], moved.data()[i]);
      }
}

TEST(Res2former, ToyParameterCountMatchesClosedForm) {
  for (int stride : {1, 2}) {
    auto cfg = net::Res2formerConfig::toy();
    cfg.embed_stride = stride;
    const net::Res2former net(cfg, 1);
    EXPECT_EQ(net.parameter_count(), res2former_count::analytic(cfg));
    EXPECT_EQ(net::count_params(net), res2former_count::analytic(cfg));
  }
}

TEST(Res2former, DefaultConfigNearReportedSize) {
  const net::Res2formerConfig cfg;
  const double count = static_cast<double>(res2former_count::analytic(cfg));
  EXPECT_NEAR(count / 11.02e6, 1.0, 0.2);
  const net::Res2former net(cfg, 1);
  EXPECT_EQ(net.parameter_count(), res2former_count::analytic(cfg));
}

TEST(Res2former, ZeroProjectionMakesModuleIdentity) {
  auto block = net::make_restsa(16, 4, 3);
  for (auto* t : {&block.fuse.weight, &block.fuse.bias})
    for (double& v : t->mutable_data()) v = 0.0;
  Rng rng(6);
  const auto x = opcases::random(rng, {16, 3, 4, 4});
  const auto y = net::restsa_module(x, block, 2);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Res2former, NamedParametersAreUniqueAndReloadable) {
  const net::Res2former a(net::Res2formerConfig::toy(), 1);
  net::Res2former b(net::Res2formerConfig::toy(), 2);
  std::set<std::string> names;
  ad::Checkpoint ck;
  for (const auto& [name, t] : a.named_parameters()) {
    EXPECT_TRUE(names.insert(name).second) << name;
    ck.tensors.emplace_back("decoder." + name, t);
  }
  b.load_parameters(ck);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t i = 0; i < pa[k].numel(); ++i) ASSERT_EQ(pa[k].data()[i], pb[k].data()[i]);
}

TEST(Res2former, SameSeedSameWeights) {
  const net::Res2former a(net::Res2formerConfig::toy(), 5), b(net::Res2formerConfig::toy(), 5);
  EXPECT_EQ(a.parameters()[3].data()[7], b.parameters()[3].data()[7]);
}

TEST(Res2former, ConfigValidation) {
  auto cfg = net::Res2formerConfig::toy();
  cfg.height = 30;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = net::Res2formerConfig::toy();
  cfg.channels = 18;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = net::Res2formerConfig::toy();
  cfg.embed_stride = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(net::Res2formerConfig::from_json(net::Res2formerConfig::toy().to_json()).channels, 16);
}

TEST(Res2former, MeasurementInputRequiresPlane) {
  auto cfg = net::Res2formerConfig::toy(4, 8, 8);
  cfg.input = net::DecoderInput::coarse_and_measurement;
  const net::Res2former net(cfg, 1);
  EXPECT_THROW(net.forward(Tensor::zeros({4, 8, 8})), std::invalid_argument);
  EXPECT_EQ(net.forward(Tensor::zeros({4, 8, 8}), Tensor::zeros({8, 8})).shape(), (ad::Shape{4, 8, 8}));
}
