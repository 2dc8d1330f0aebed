#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "sci/pipeline.hpp"
#include "sci/scenes.hpp"
#include "sci/sensor.hpp"

using namespace sci;
using namespace sci::pipeline;

namespace {

TrainConfig tiny_config(std::int64_t steps) {
  auto c = toy_train_config(4, 16, 16);
  c.steps = steps;
  c.samples = 3;
  c.validation_samples = 2;
  c.batch_size = 2;
  c.validate_every = 2;
  c.seed = 3;
  return c;
}

std::vector<VideoCube> tiny_scenes(int count, std::uint64_t seed) {
  return scenes::synthesize_suite(count, 4, 16, 16, seed);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sci_pipeline_" + name);
}

}  // namespace

TEST(Pipeline, PerfectDecoderHasZeroLoss) {
  const auto scene = tiny_scenes(1, 1)[0];
  const auto truth = to_tensor(scene);
  const auto m = mask::random_structural(4, 16, 16, 3, 2);
  const auto values = ad::Tensor::from({4, 16, 16}, m.values());
  const auto settings = encoder_settings(EncoderVariant::ls_with_sr, m, 8);
  const auto loss = sample_loss(truth, values, settings, 0, [&](const EncodedTensors&) { return truth; });
  EXPECT_EQ(loss.item(), 0.0);
}

TEST(Pipeline, LossReachesMaskParameters) {
  const auto scene = tiny_scenes(1, 4)[0];
  const auto truth = to_tensor(scene);
  std::vector<double> init(4 * 16 * 16);
  for (std::size_t i = 0; i < init.size(); ++i) init[i] = static_cast<double>((i * 31) % 17) / 17.0;
  auto mprime = ad::Tensor::from({4, 16, 16}, init, true);
  const EncoderSettings settings{EncoderVariant::ls_with_sr, 3, 8, 1.0, 0.0};
  const auto loss = sample_loss(truth, ste_structuralize(mprime, 3), settings, 0,
                                [](const EncodedTensors& e) { return e.coarse; });
  loss.backward();
  double norm = 0.0;
  for (double g : mprime.grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

TEST(Pipeline, EncodedMeasurementMatchesSensorCodes) {
  const auto scene = tiny_scenes(1, 5)[0];
  const auto m = mask::random_structural(4, 16, 16, 4, 9);
  const auto values = ad::Tensor::from({4, 16, 16}, m.values());
  const auto enc = encode_tensor(to_tensor(scene), values, encoder_settings(EncoderVariant::ls_with_sr, m, 8), 0);
  const auto reference = sensor::encode(scene, m, {});
  for (int u = 0; u < 16; ++u)
    for (int v = 0; v < 16; ++v) EXPECT_NEAR(enc.measurement.data()[u * 16 + v], reference.normalized(u, v), 1e-9);
}

TEST(Pipeline, ConfigJsonRoundTrip) {
  auto c = tiny_config(17);
  c.encoder = EncoderVariant::rb_with_sr;
  c.mask_mode = MaskMode::random;
  c.noise_sigma = 0.01;
  c.seed = 12345678901234ULL;
  const auto back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.encoder, EncoderVariant::rb_with_sr);
  EXPECT_EQ(back.decoder.embed_stride, 2);
}

TEST(Pipeline, ConfigValidation) {
  auto c = tiny_config(5);
  c.lambda = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config(5);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config(5);
  c.encoder = EncoderVariant::rb_with_sr;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.mask_mode = MaskMode::random;
  EXPECT_NO_THROW(c.validate());
}

TEST(Pipeline, EncoderNames) {
  EXPECT_EQ(parse_encoder("rbw/osr"), EncoderVariant::rb_without_sr);
  EXPECT_EQ(parse_encoder("RBw/SR"), EncoderVariant::rb_with_sr);
  EXPECT_EQ(parse_encoder("LSw/SR"), EncoderVariant::ls_with_sr);
  EXPECT_FALSE(parse_encoder("LS").has_value());
  for (auto e : {EncoderVariant::rb_without_sr, EncoderVariant::rb_with_sr, EncoderVariant::ls_with_sr})
    EXPECT_EQ(parse_encoder(to_string(e)), e);
}

TEST(Pipeline, IncompatibleMaskRejected) {
  const auto structural = mask::random_structural(4, 16, 16, 4, 1);
  const auto binary = mask::random_binary(4, 16, 16, 0.5, 1);
  EXPECT_THROW(encoder_settings(EncoderVariant::rb_with_sr, structural, 8), std::invalid_argument);
  EXPECT_THROW(encoder_settings(EncoderVariant::ls_with_sr, binary, 8), std::invalid_argument);
  EXPECT_NEAR(encoder_settings(EncoderVariant::rb_with_sr, binary, 8).aperture, sensor::auto_aperture(binary), 0.0);
}

TEST(Pipeline, TrainingLowersLossAndLogs) {
  const auto c = tiny_config(8);
  const auto result = train(c, tiny_scenes(3, 1), tiny_scenes(2, 2));
  ASSERT_EQ(result.log.size(), 8u);
  EXPECT_TRUE(result.log[1].val_psnr.has_value());
  EXPECT_FALSE(result.log[0].val_psnr.has_value());
  EXPECT_LT(result.final_loss, result.initial_loss);
  EXPECT_TRUE(mask::validate(result.mask).ok());
  EXPECT_GT(result.log.front().lr, result.log.back().lr);
}

TEST(Pipeline, ResumeIsBitExact) {
  const auto c = tiny_config(6);
  const auto train_set = tiny_scenes(3, 1);
  const auto val_set = tiny_scenes(2, 2);

  Trainer straight(c, train_set, val_set);
  straight.run();

  const auto path = temp_path("resume.ckpt");
  {
    Trainer first(c, train_set, val_set);
    first.run_until(3);
    first.save(path);
  }
  auto second = Trainer::resume(path, train_set, val_set);
  EXPECT_EQ(second.step(), 3);
  second.run();

  EXPECT_EQ(second.mask(), straight.mask());
  const auto a = straight.decoder().named_parameters();
  const auto b = second.decoder().named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].first, b[i].first);
    const auto x = a[i].second.data();
    const auto y = b[i].second.data();
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end())) << a[i].first;
  }
  EXPECT_EQ(second.log().back().loss, straight.log().back().loss);

  const auto model = load_model(path);
  EXPECT_EQ(model.step, 3);
  EXPECT_EQ(model.config.to_json(), c.to_json());
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}

TEST(Pipeline, RandomMaskModeKeepsMaskFixed) {
  auto c = tiny_config(3);
  c.mask_mode = MaskMode::random;
  Trainer t(c, tiny_scenes(3, 1), tiny_scenes(2, 2));
  const auto before = t.mask();
  t.run();
  EXPECT_EQ(t.mask(), before);
}

TEST(Pipeline, EvaluateChecksCompatibility) {
  auto c = tiny_config(1);
  Trainer t(c, tiny_scenes(3, 1), tiny_scenes(2, 2));
  const auto binary = mask::random_binary(4, 16, 16, 0.5, 1);
  EncoderSettings settings = t.settings();
  EXPECT_THROW(evaluate(t.decoder(), binary, settings, tiny_scenes(1, 3), 0), std::invalid_argument);
  const auto q = evaluate(t.decoder(), t.mask(), settings, tiny_scenes(2, 3), 0);
  EXPECT_EQ(q.videos, 2u);
}

TEST(Pipeline, AblationHasOneRowPerPair) {
  auto c = tiny_config(2);
  const auto rows = ablation_bitdepth({2, 4}, c, tiny_scenes(3, 1), tiny_scenes(2, 2));
  ASSERT_EQ(rows.size(), 4u);
  const auto csv = ablation_csv(rows);
  EXPECT_EQ(csv.rfind("lambda,mode,psnr,ssim,levels\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
