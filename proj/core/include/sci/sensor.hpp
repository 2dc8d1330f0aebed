#pragma once

#include <cstdint>
#include <span>

#include "sci/mask.hpp"
#include "sci/video.hpp"

namespace sci::sensor {

/// Linear-corrected sensor: clipping g followed by kappa-bit quantization h,
/// with optional additive Gaussian read noise applied before the response.
struct SensorModel {
  int kappa = 8;
  double clip_low = 0.0;
  double clip_high = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::uint32_t max_code() const noexcept { return (1u << kappa) - 1u; }
};

/// Elementwise M(u,v,t) * X(u,v,t). `mask` is frame-major transmittance.
VideoCube modulate(const VideoCube& scene, std::span<const double> mask);
VideoCube modulate(const VideoCube& scene, const mask::MaskCube& mask);
VideoCube modulate(const VideoCube& scene, const mask::LearnableMask& mask);

/// Temporal sum over frames, accumulated in double.
Image integrate(const VideoCube& coded);

/// Phi x in image layout, i.e. integrate(modulate(x, m)) without the float
/// rounding of the intermediate cube.
Image project(const VideoCube& scene, std::span<const double> mask);

/// g then h: clip to [clip_low, clip_high], then floor((2^k - 1) x + 0.5).
Measurement respond(const Image& irradiance, const SensorModel& sensor);
/// Single-value response code (no noise).
std::uint32_t respond_code(double irradiance, const SensorModel& sensor);

Image add_noise(const Image& image, const SensorModel& sensor);

/// respond(add_noise(aperture * Phi x)).
Measurement encode(const VideoCube& scene, const mask::MaskCube& mask, const SensorModel& sensor,
                   double aperture = 1.0);

/// 1 / mean_{u,v} sum_t M(u,v,t). Throws std::domain_error for an all-zero mask.
double auto_aperture(const mask::MaskCube& mask);

/// (Phi Phi^T)^{-1} y: divides by max(sum_t M^2, 2^(-2 lambda)) per pixel.
Image normalize_measurement(const Image& measurement, const mask::MaskCube& mask);
Image normalize_measurement(const Measurement& measurement, const mask::MaskCube& mask);

/// Phi^T (Phi Phi^T)^{-1} y lifted to B x H x W.
VideoCube coarse_estimate(const Image& measurement, const mask::MaskCube& mask);
VideoCube coarse_estimate(const Measurement& measurement, const mask::MaskCube& mask);

}  // namespace sci::sensor
