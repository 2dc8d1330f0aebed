#include "sci/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sci/ad/ops.hpp"
#include "sci/random.hpp"
#include "sci/sensor.hpp"

namespace sci::pipeline {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kDecoderStream = 0, kMaskStream = 1, kBatchStream = 2, kNoiseStream = 3, kValidationStream = 4 };

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_rb(EncoderVariant variant) { return variant != EncoderVariant::ls_with_sr; }

void check_scene(const VideoCube& scene, const net::Res2formerConfig& cfg) {
  if (scene.frames() != cfg.frames || scene.height() != cfg.height || scene.width() != cfg.width) {
    throw ShapeError("scene geometry " + std::to_string(scene.frames()) + "x" + std::to_string(scene.height()) +
                     "x" + std::to_string(scene.width()) + " does not match the decoder " +
                     std::to_string(cfg.frames) + "x" + std::to_string(cfg.height) + "x" +
                     std::to_string(cfg.width));
  }
}

ad::Tensor mask_values_tensor(const mask::MaskCube& mask) {
  return ad::Tensor::from({mask.frames(), mask.height(), mask.width()}, mask.values());
}

DecoderFn network_fn(const net::Res2former& decoder) {
  return [&decoder](const EncodedTensors& enc) { return decoder.forward(enc.coarse, enc.measurement); };
}

}  // namespace

std::string to_string(EncoderVariant variant) {
  switch (variant) {
    case EncoderVariant::rb_without_sr: return "RBw/oSR";
    case EncoderVariant::rb_with_sr: return "RBw/SR";
    case EncoderVariant::ls_with_sr: return "LSw/SR";
  }
  return "unknown";
}

std::optional<EncoderVariant> parse_encoder(std::string_view text) {
  const std::string key = lower(text);
  for (auto v : {EncoderVariant::rb_without_sr, EncoderVariant::rb_with_sr, EncoderVariant::ls_with_sr}) {
    if (key == lower(to_string(v))) return v;
  }
  return std::nullopt;
}

std::string to_string(MaskMode mode) { return mode == MaskMode::learned ? "learned" : "random"; }

std::optional<MaskMode> parse_mask_mode(std::string_view text) {
  const std::string key = lower(text);
  if (key == "learned") return MaskMode::learned;
  if (key == "random") return MaskMode::random;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (validation_samples < 0) throw std::invalid_argument("validation_samples must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(lr_initial > 0.0) || !(lr_final > 0.0)) throw std::invalid_argument("learning rates must be > 0");
  if (lambda < 1 || lambda > 8) throw std::invalid_argument("lambda must be in [1, 8]");
  if (kappa < 1 || kappa > 16) throw std::invalid_argument("kappa must be in [1, 16]");
  if (!(binary_p > 0.0 && binary_p < 1.0)) throw std::invalid_argument("binary_p must be in (0, 1)");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (validate_every < 0 || checkpoint_every < 0) throw std::invalid_argument("cadences must be >= 0");
  if (is_rb(encoder) && mask_mode != MaskMode::random) {
    throw std::invalid_argument(to_string(encoder) + " uses a fixed random binary mask; mask mode must be random");
  }
  decoder.validate();
}

std::string TrainConfig::to_json() const {
  json j{{"samples", samples},
         {"validation_samples", validation_samples},
         {"batch_size", batch_size},
         {"steps", steps},
         {"lr_initial", lr_initial},
         {"lr_final", lr_final},
         {"lambda", lambda},
         {"kappa", kappa},
         {"encoder", to_string(encoder)},
         {"mask_mode", to_string(mask_mode)},
         {"binary_p", binary_p},
         {"noise_sigma", noise_sigma},
         {"seed", seed},
         {"validate_every", validate_every},
         {"checkpoint_every", checkpoint_every},
         {"decoder", json::parse(decoder.to_json())}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  TrainConfig c;
  c.samples = j.value("samples", c.samples);
  c.validation_samples = j.value("validation_samples", c.validation_samples);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.lr_initial = j.value("lr_initial", c.lr_initial);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.lambda = j.value("lambda", c.lambda);
  c.kappa = j.value("kappa", c.kappa);
  if (j.contains("encoder")) {
    auto v = parse_encoder(j.at("encoder").get<std::string>());
    if (!v) throw std::invalid_argument("unknown encoder variant in config");
    c.encoder = *v;
  }
  if (j.contains("mask_mode")) {
    auto m = parse_mask_mode(j.at("mask_mode").get<std::string>());
    if (!m) throw std::invalid_argument("unknown mask mode in config");
    c.mask_mode = *m;
  }
  c.binary_p = j.value("binary_p", c.binary_p);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.seed = j.value("seed", c.seed);
  c.validate_every = j.value("validate_every", c.validate_every);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("decoder")) c.decoder = net::Res2formerConfig::from_json(j.at("decoder").dump());
  return c;
}

TrainConfig toy_train_config(int frames, int height, int width) {
  TrainConfig c;
  c.decoder = net::Res2formerConfig::toy(frames, height, width);
  c.decoder.embed_stride = 2;
  c.lr_initial = 1e-3;
  c.lr_final = 1e-4;
  c.steps = 2000;
  return c;
}

EncoderSettings encoder_settings(EncoderVariant variant, const mask::MaskCube& mask, int kappa,
                                 double noise_sigma) {
  EncoderSettings s;
  s.variant = variant;
  s.lambda = mask.lambda();
  s.kappa = kappa;
  s.noise_sigma = noise_sigma;
  if (is_rb(variant)) {
    if (mask.structural() || mask.lambda() != 1) {
      throw std::invalid_argument(to_string(variant) + " needs a random binary mask");
    }
    if (variant == EncoderVariant::rb_with_sr) s.aperture = sensor::auto_aperture(mask);
  } else if (!mask.structural()) {
    throw std::invalid_argument("LSw/SR needs a structural mask");
  }
  return s;
}

ad::Tensor ste_structuralize(const ad::Tensor& mprime, int lambda) {
  if (mprime.ndim() != 3) throw ShapeError("ste_structuralize expects [B, H, W], got " + ad::to_string(mprime.shape()));
  const int frames = mprime.dim(0), height = mprime.dim(1), width = mprime.dim(2);
  return ad::straight_through(
      mprime,
      [=](std::span<const double> values) {
        mask::LearnableMask m(frames, height, width, std::vector<double>(values.begin(), values.end()));
        return mask::structuralize(m, lambda).values();
      },
      "ste_structuralize");
}

ad::Tensor ste_respond(const ad::Tensor& irradiance, int kappa) {
  sensor::SensorModel sensor;
  sensor.kappa = kappa;
  sensor.validate();
  const double max_code = static_cast<double>(sensor.max_code());
  return ad::straight_through(
      irradiance,
      [sensor, max_code](std::span<const double> values) {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
          out[i] = static_cast<double>(sensor::respond_code(values[i], sensor)) / max_code;
        }
        return out;
      },
      "ste_respond");
}

EncodedTensors encode_tensor(const ad::Tensor& scene, const ad::Tensor& mask_values,
                             const EncoderSettings& settings, std::uint64_t noise_seed) {
  if (scene.ndim() != 3 || scene.shape() != mask_values.shape()) {
    throw ShapeError("encode_tensor: scene " + ad::to_string(scene.shape()) + " and mask " +
                     ad::to_string(mask_values.shape()) + " must both be [B, H, W]");
  }
  if (!(settings.aperture > 0.0)) throw std::invalid_argument("aperture must be > 0");
  const int height = scene.dim(1), width = scene.dim(2);

  ad::Tensor y = ad::sum_axis(ad::mul(mask_values, scene), 0);
  const bool respond = settings.variant != EncoderVariant::rb_without_sr;
  if (respond && settings.aperture != 1.0) y = ad::scale(y, settings.aperture);
  if (settings.noise_sigma > 0.0) {
    Rng rng(noise_seed);
    std::vector<double> noise(static_cast<std::size_t>(height) * width);
    for (double& n : noise) n = settings.noise_sigma * rng.normal();
    y = ad::add(y, ad::Tensor::from({height, width}, std::move(noise)));
  }
  if (respond) {
    y = ste_respond(y, settings.kappa);
    if (settings.aperture != 1.0) y = ad::scale(y, 1.0 / settings.aperture);
  }

  const ad::Tensor diag =
      ad::clamp_min(ad::sum_axis(ad::mul(mask_values, mask_values), 0), std::ldexp(1.0, -2 * settings.lambda));
  return {y, ad::mul(mask_values, ad::div(y, diag))};
}

ad::Tensor sample_loss(const ad::Tensor& truth, const ad::Tensor& mask_values, const EncoderSettings& settings,
                       std::uint64_t noise_seed, const DecoderFn& decoder) {
  const EncodedTensors enc = encode_tensor(truth, mask_values, settings, noise_seed);
  return ad::mse_loss(decoder(enc), truth);
}

ad::Tensor to_tensor(const VideoCube& video) {
  return ad::Tensor::from({video.frames(), video.height(), video.width()},
                          std::vector<double>(video.data().begin(), video.data().end()));
}

VideoCube to_video(const ad::Tensor& tensor) {
  if (tensor.ndim() != 3) throw ShapeError("to_video expects [B, H, W], got " + ad::to_string(tensor.shape()));
  std::vector<float> out(tensor.numel());
  const auto data = tensor.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(std::clamp(data[i], 0.0, 1.0));
  return VideoCube(tensor.dim(0), tensor.dim(1), tensor.dim(2), std::move(out));
}

std::vector<VideoCube> reconstruct(const net::Res2former& decoder, const mask::MaskCube& mask,
                                   const EncoderSettings& settings, const std::vector<VideoCube>& scenes,
                                   std::uint64_t noise_seed) {
  ad::NoGradGuard guard;
  const ad::Tensor m = mask_values_tensor(mask);
  std::vector<VideoCube> out;
  out.reserve(scenes.size());
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    check_scene(scenes[k], decoder.config());
    if (!mask.same_geometry(scenes[k])) throw ShapeError("reconstruct: mask and scene geometry differ");
    const EncodedTensors enc = encode_tensor(to_tensor(scenes[k]), m, settings, derive_seed(noise_seed, k));
    out.push_back(to_video(decoder.forward(enc.coarse, enc.measurement)));
  }
  return out;
}

metrics::QualityReport evaluate(const net::Res2former& decoder, const mask::MaskCube& mask,
                                const EncoderSettings& settings, const std::vector<VideoCube>& scenes,
                                std::uint64_t noise_seed) {
  if (is_rb(settings.variant) && (mask.structural() || mask.lambda() != 1)) {
    throw std::invalid_argument(to_string(settings.variant) + " evaluation needs a binary mask");
  }
  if (!is_rb(settings.variant) && !mask.structural()) {
    throw std::invalid_argument("LSw/SR evaluation needs a structural mask");
  }
  return metrics::evaluate_quality(reconstruct(decoder, mask, settings, scenes, noise_seed), scenes);
}

std::string log_csv_header() { return "step,loss,lr,val_psnr\n"; }

std::string log_csv_row(const LogRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.step << ',' << row.loss << ',' << row.lr << ',';
  if (row.val_psnr) os << *row.val_psnr;
  os << '\n';
  return os.str();
}

Trainer::Trainer(TrainConfig config, std::vector<VideoCube> train_set, std::vector<VideoCube> validation_set)
    : config_(std::move(config)), train_(std::move(train_set)), validation_(std::move(validation_set)) {
  config_.validate();
  if (train_.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& s : train_) check_scene(s, config_.decoder);
  for (const auto& s : validation_) check_scene(s, config_.decoder);

  decoder_ = net::Res2former(config_.decoder, derive_seed(config_.seed, kDecoderStream));
  const auto& d = config_.decoder;
  const std::uint64_t mask_seed = derive_seed(config_.seed, kMaskStream);
  if (is_rb(config_.encoder)) {
    fixed_mask_ = mask::random_binary(d.frames, d.height, d.width, config_.binary_p, mask_seed);
  } else if (config_.mask_mode == MaskMode::random) {
    fixed_mask_ = mask::random_structural(d.frames, d.height, d.width, config_.lambda, mask_seed);
  } else {
    const auto init = mask::LearnableMask::uniform_random(d.frames, d.height, d.width, mask_seed);
    mprime_ = ad::Tensor::from({d.frames, d.height, d.width},
                               std::vector<double>(init.values().begin(), init.values().end()), true);
  }
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, std::vector<VideoCube> train_set,
                        std::vector<VideoCube> validation_set) {
  const ad::Checkpoint ck = ad::load_checkpoint(checkpoint);
  const json meta = json::parse(ck.metadata);
  if (!meta.contains("train_config")) throw std::runtime_error(checkpoint.string() + " is not a training checkpoint");
  Trainer t(TrainConfig::from_json(meta.at("train_config").dump()), std::move(train_set), std::move(validation_set));
  t.decoder_.load_parameters(ck);
  if (t.mprime_.defined()) {
    const ad::Tensor* m = ck.find("mask.mprime");
    if (!m || m->shape() != t.mprime_.shape()) throw std::runtime_error("checkpoint has no matching mask.mprime");
    std::copy(m->data().begin(), m->data().end(), t.mprime_.mutable_data().begin());
  }
  if (ck.adam) t.adam_ = *ck.adam;
  t.step_ = meta.at("step").get<std::int64_t>();
  return t;
}

ad::Tensor Trainer::mask_tensor() const {
  if (mprime_.defined()) return ste_structuralize(mprime_, config_.lambda);
  return mask_values_tensor(fixed_mask_);
}

mask::MaskCube Trainer::mask() const {
  if (!mprime_.defined()) return fixed_mask_;
  const auto& d = config_.decoder;
  return mask::structuralize(
      mask::LearnableMask(d.frames, d.height, d.width, std::vector<double>(mprime_.data().begin(), mprime_.data().end())),
      config_.lambda);
}

EncoderSettings Trainer::settings() const {
  return encoder_settings(config_.encoder, mask(), config_.kappa, config_.noise_sigma);
}

std::vector<ad::Tensor> Trainer::parameters() const {
  auto params = decoder_.parameters();
  if (mprime_.defined()) params.push_back(mprime_);
  return params;
}

void Trainer::run_until(std::int64_t target, const std::function<void(const LogRow&)>& on_row) {
  target = std::min(target, config_.steps);
  auto params = parameters();
  const auto clamp = std::make_unique<bool[]>(params.size());
  if (mprime_.defined()) clamp[params.size() - 1] = true;
  const ad::LrSchedule schedule{config_.lr_initial, config_.lr_final, config_.steps};
  const std::uint64_t batch_seed = derive_seed(config_.seed, kBatchStream);
  const std::uint64_t noise_seed = derive_seed(config_.seed, kNoiseStream);
  const DecoderFn fn = network_fn(decoder_);

  while (step_ < target) {
    for (auto& p : params) p.zero_grad();
    const ad::Tensor m = mask_tensor();
    const EncoderSettings settings =
        is_rb(config_.encoder) ? encoder_settings(config_.encoder, fixed_mask_, config_.kappa, config_.noise_sigma)
                               : EncoderSettings{config_.encoder, config_.lambda, config_.kappa, 1.0, config_.noise_sigma};

    Rng pick(derive_seed(batch_seed, static_cast<std::uint64_t>(step_)));
    const std::uint64_t step_noise = derive_seed(noise_seed, static_cast<std::uint64_t>(step_));
    ad::Tensor loss;
    for (int b = 0; b < config_.batch_size; ++b) {
      const std::size_t k = pick.below(train_.size());
      ad::Tensor l = sample_loss(to_tensor(train_[k]), m, settings, derive_seed(step_noise, b), fn);
      loss = loss.defined() ? ad::add(loss, l) : l;
    }
    if (config_.batch_size > 1) loss = ad::scale(loss, 1.0 / config_.batch_size);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw std::runtime_error("training diverged at step " + std::to_string(step_ + 1) + ": loss is " +
                               std::to_string(value));
    }
    loss.backward();
    const double lr = schedule.at(step_);
    ad::adam_step(params, adam_, lr, std::span<const bool>(clamp.get(), params.size()));
    ++step_;

    LogRow row{step_, value, lr, std::nullopt};
    if (config_.validate_every > 0 && step_ % config_.validate_every == 0 && !validation_.empty()) {
      row.val_psnr = validate().psnr.mean;
    }
    log_.push_back(row);
    if (on_row) on_row(row);
  }
}

double Trainer::dataset_loss(const std::vector<VideoCube>& scenes) const {
  if (scenes.empty()) return 0.0;
  ad::NoGradGuard guard;
  EncoderSettings s = settings();
  s.noise_sigma = 0.0;
  const ad::Tensor m = mask_values_tensor(mask());
  const DecoderFn fn = network_fn(decoder_);
  double total = 0.0;
  for (const auto& scene : scenes) total += sample_loss(to_tensor(scene), m, s, 0, fn).item();
  return total / static_cast<double>(scenes.size());
}

metrics::QualityReport Trainer::validate() const {
  return evaluate(decoder_, mask(), settings(), validation_, derive_seed(config_.seed, kValidationStream));
}

ad::Checkpoint Trainer::checkpoint() const {
  ad::Checkpoint ck;
  for (auto& [name, t] : decoder_.named_parameters()) ck.tensors.emplace_back("decoder." + name, t);
  if (mprime_.defined()) ck.tensors.emplace_back("mask.mprime", mprime_);
  ck.adam = adam_;
  json meta{{"train_config", json::parse(config_.to_json())},
            {"decoder_config", json::parse(config_.decoder.to_json())},
            {"step", step_}};
  ck.metadata = meta.dump(2);
  return ck;
}

void Trainer::save(const std::filesystem::path& path) const { ad::save_checkpoint(path, checkpoint()); }

TrainResult train(const TrainConfig& config, const std::vector<VideoCube>& train_set,
                  const std::vector<VideoCube>& validation_set) {
  Trainer trainer(config, train_set, validation_set);
  TrainResult result;
  result.initial_loss = trainer.dataset_loss(train_set);
  trainer.run();
  result.final_loss = trainer.dataset_loss(train_set);
  result.mask = trainer.mask();
  result.decoder = trainer.decoder();
  result.log = trainer.log();
  if (!validation_set.empty()) result.validation = trainer.validate();
  return result;
}

Model load_model(const std::filesystem::path& checkpoint) {
  const ad::Checkpoint ck = ad::load_checkpoint(checkpoint);
  const json meta = json::parse(ck.metadata);
  if (!meta.contains("train_config")) throw std::runtime_error(checkpoint.string() + " is not a training checkpoint");
  Model model;
  model.config = TrainConfig::from_json(meta.at("train_config").dump());
  model.config.validate();
  model.step = meta.value("step", std::int64_t{0});
  model.decoder = net::Res2former(model.config.decoder, 0);
  model.decoder.load_parameters(ck);

  const auto& d = model.config.decoder;
  const std::uint64_t mask_seed = derive_seed(model.config.seed, kMaskStream);
  if (is_rb(model.config.encoder)) {
    model.mask = mask::random_binary(d.frames, d.height, d.width, model.config.binary_p, mask_seed);
  } else if (model.config.mask_mode == MaskMode::random) {
    model.mask = mask::random_structural(d.frames, d.height, d.width, model.config.lambda, mask_seed);
  } else {
    const ad::Tensor* m = ck.find("mask.mprime");
    if (!m || m->numel() != static_cast<std::size_t>(d.frames) * d.height * d.width) {
      throw std::runtime_error("checkpoint has no matching mask.mprime");
    }
    model.mask = mask::structuralize(
        mask::LearnableMask(d.frames, d.height, d.width, std::vector<double>(m->data().begin(), m->data().end())),
        model.config.lambda);
  }
  return model;
}

std::vector<AblationRow> ablation_bitdepth(const std::vector<int>& lambdas, const TrainConfig& base,
                                           const std::vector<VideoCube>& train_set,
                                           const std::vector<VideoCube>& validation_set) {
  if (validation_set.empty()) throw std::invalid_argument("ablation needs a validation set");
  std::vector<AblationRow> rows;
  for (int lambda : lambdas) {
    if (lambda < 1) throw std::invalid_argument("ablation lambda must be >= 1");
    for (MaskMode mode : {MaskMode::learned, MaskMode::random}) {
      TrainConfig cfg = base;
      cfg.lambda = lambda;
      cfg.mask_mode = mode;
      cfg.encoder = EncoderVariant::ls_with_sr;
      cfg.validate_every = 0;
      const TrainResult result = train(cfg, train_set, validation_set);
      const EncoderSettings s = encoder_settings(cfg.encoder, result.mask, cfg.kappa, cfg.noise_sigma);
      const auto recon = reconstruct(result.decoder, result.mask, s, validation_set,
                                     derive_seed(cfg.seed, kValidationStream));
      double levels = 0.0;
      for (std::size_t k = 0; k < recon.size(); ++k) {
        levels += static_cast<double>(
            metrics::dynamic_range_report(recon[k], validation_set[k], cfg.kappa).reconstructed_levels);
      }
      rows.push_back({lambda, mode, result.validation.psnr.mean, result.validation.ssim.mean,
                      levels / static_cast<double>(recon.size())});
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "lambda,mode,psnr,ssim,levels\n";
  for (const auto& r : rows) {
    os << r.lambda << ',' << to_string(r.mode) << ',' << r.psnr << ',' << r.ssim << ',' << r.distinct_levels << '\n';
  }
  return os.str();
}

}  // namespace sci::pipeline
