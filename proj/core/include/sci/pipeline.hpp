#pragma once

// End-to-end joint optimization of the coded-aperture mask and the decoder,
// encoder-variant evaluation, and the mask bit-depth ablation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sci/ad/checkpoint.hpp"
#include "sci/ad/optim.hpp"
#include "sci/ad/tensor.hpp"
#include "sci/mask.hpp"
#include "sci/metrics.hpp"
#include "sci/res2former.hpp"
#include "sci/video.hpp"

namespace sci::pipeline {

/// RBw/oSR: random binary mask, no sensor response.
/// RBw/SR: random binary mask, auto-aperture scaling then sensor response.
/// LSw/SR: structural mask (learned or random), sensor response.
enum class EncoderVariant { rb_without_sr, rb_with_sr, ls_with_sr };

std::string to_string(EncoderVariant variant);
/// Accepts "RBw/oSR", "RBw/SR", "LSw/SR" (case-insensitive).
std::optional<EncoderVariant> parse_encoder(std::string_view text);

enum class MaskMode { learned, random };
std::string to_string(MaskMode mode);
std::optional<MaskMode> parse_mask_mode(std::string_view text);

struct TrainConfig {
  /// K, the number of training scenes synthesized by the CLI.
  int samples = 8;
  /// Held-out scenes used for validation PSNR.
  int validation_samples = 4;
  int batch_size = 1;
  std::int64_t steps = 2000;
  double lr_initial = 1e-4;
  double lr_final = 1e-5;
  int lambda = 4;
  int kappa = 8;
  EncoderVariant encoder = EncoderVariant::ls_with_sr;
  MaskMode mask_mode = MaskMode::learned;
  /// Open probability of the random binary mask used by the RB variants.
  double binary_p = 0.5;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Validation PSNR is logged every this many steps (0 disables).
  std::int64_t validate_every = 200;
  /// The CLI writes a checkpoint every this many steps (0: only at the end).
  std::int64_t checkpoint_every = 0;
  net::Res2formerConfig decoder = net::Res2formerConfig::toy();

  /// Throws std::invalid_argument when a field is illegal.
  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

/// Configuration used by the toy acceptance runs: toy decoder on a half
/// resolution trunk, learning rate 1e-3 -> 1e-4.
TrainConfig toy_train_config(int frames = 8, int height = 32, int width = 32);

/// How a scene is turned into the decoder input.
struct EncoderSettings {
  EncoderVariant variant = EncoderVariant::ls_with_sr;
  int lambda = 4;
  int kappa = 8;
  /// Irradiance scale applied before the sensor response.
  double aperture = 1.0;
  double noise_sigma = 0.0;
};

/// Settings for encoding with `mask` under `variant`; the RBw/SR aperture is
/// auto_aperture(mask). Throws std::invalid_argument when the mask does not
/// fit the variant (RB variants need a binary mask, LSw/SR a structural one).
EncoderSettings encoder_settings(EncoderVariant variant, const mask::MaskCube& mask, int kappa,
                                 double noise_sigma = 0.0);

struct EncodedTensors {
  ad::Tensor measurement;  // [H, W] in irradiance units (divided by the aperture)
  ad::Tensor coarse;       // [B, H, W] = Phi^T (Phi Phi^T)^{-1} y
};

/// Differentiable encoder: modulation, integration, optional aperture, noise
/// and sensor response (identity backward), then the coarse lift.
EncodedTensors encode_tensor(const ad::Tensor& scene, const ad::Tensor& mask_values,
                             const EncoderSettings& settings, std::uint64_t noise_seed);

/// Structural quantization of M' with identity backward.
ad::Tensor ste_structuralize(const ad::Tensor& mprime, int lambda);
/// Sensor response R (clip then kappa-bit quantization, normalized) with identity backward.
ad::Tensor ste_respond(const ad::Tensor& irradiance, int kappa);

using DecoderFn = std::function<ad::Tensor(const EncodedTensors&)>;

/// ||D(R(H(x))) - x||^2 averaged over elements, for one scene.
ad::Tensor sample_loss(const ad::Tensor& truth, const ad::Tensor& mask_values,
                       const EncoderSettings& settings, std::uint64_t noise_seed,
                       const DecoderFn& decoder);

ad::Tensor to_tensor(const VideoCube& video);
/// Copies a [B, H, W] tensor into a cube, clipping to [0, 1].
VideoCube to_video(const ad::Tensor& tensor);

/// Runs the decoder on the encoding of every scene (no gradient recording).
std::vector<VideoCube> reconstruct(const net::Res2former& decoder, const mask::MaskCube& mask,
                                   const EncoderSettings& settings, const std::vector<VideoCube>& scenes,
                                   std::uint64_t noise_seed);

metrics::QualityReport evaluate(const net::Res2former& decoder, const mask::MaskCube& mask,
                                const EncoderSettings& settings, const std::vector<VideoCube>& scenes,
                                std::uint64_t noise_seed);

struct LogRow {
  std::int64_t step = 0;  // 1-based index of the update just applied
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_psnr;
};

std::string log_csv_header();
std::string log_csv_row(const LogRow& row);

class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<VideoCube> train_set, std::vector<VideoCube> validation_set);

  /// Restores decoder, mask parameters, optimizer state and step counter.
  static Trainer resume(const std::filesystem::path& checkpoint, std::vector<VideoCube> train_set,
                        std::vector<VideoCube> validation_set);

  /// Applies updates until step() == target (capped at config().steps).
  /// Throws std::runtime_error if the loss becomes non-finite.
  void run_until(std::int64_t target, const std::function<void(const LogRow&)>& on_row = {});
  void run(const std::function<void(const LogRow&)>& on_row = {}) { run_until(config_.steps, on_row); }

  std::int64_t step() const noexcept { return step_; }
  const TrainConfig& config() const noexcept { return config_; }
  const std::vector<LogRow>& log() const noexcept { return log_; }
  const net::Res2former& decoder() const noexcept { return decoder_; }

  /// The mask the encoder currently applies (structuralized M' when learned).
  mask::MaskCube mask() const;
  EncoderSettings settings() const;

  /// Noise-free mean loss over a set of scenes with the current parameters.
  double dataset_loss(const std::vector<VideoCube>& scenes) const;
  metrics::QualityReport validate() const;

  ad::Checkpoint checkpoint() const;
  void save(const std::filesystem::path& path) const;

 private:
  ad::Tensor mask_tensor() const;
  std::vector<ad::Tensor> parameters() const;

  TrainConfig config_;
  std::vector<VideoCube> train_;
  std::vector<VideoCube> validation_;
  net::Res2former decoder_;
  ad::Tensor mprime_;                // learned mode only
  mask::MaskCube fixed_mask_;        // random modes
  ad::AdamState adam_;
  std::int64_t step_ = 0;
  std::vector<LogRow> log_;
};

struct TrainResult {
  mask::MaskCube mask;
  net::Res2former decoder;
  std::vector<LogRow> log;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  metrics::QualityReport validation;
};

/// Full run: measures the training-set loss before and after optimizing.
TrainResult train(const TrainConfig& config, const std::vector<VideoCube>& train_set,
                  const std::vector<VideoCube>& validation_set);

/// A trained decoder with the mask and variant it was trained with.
struct Model {
  TrainConfig config;
  net::Res2former decoder;
  mask::MaskCube mask;
  std::int64_t step = 0;
};

Model load_model(const std::filesystem::path& checkpoint);

struct AblationRow {
  int lambda = 0;
  MaskMode mode = MaskMode::learned;
  double psnr = 0.0;
  double ssim = 0.0;
  /// Mean count of distinct kappa-bit levels in the reconstructions.
  double distinct_levels = 0.0;
};

/// Paired learned / random structural-mask runs per lambda with the same budget.
std::vector<AblationRow> ablation_bitdepth(const std::vector<int>& lambdas, const TrainConfig& base,
                                           const std::vector<VideoCube>& train_set,
                                           const std::vector<VideoCube>& validation_set);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace sci::pipeline
