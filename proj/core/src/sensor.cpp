#include "sci/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sci/random.hpp"

namespace sci::sensor {

namespace {

void check_mask_size(const VideoCube& scene, std::span<const double> mask) {
  if (mask.size() != scene.size()) {
    throw ShapeError("mask has " + std::to_string(mask.size()) + " entries, scene has " +
                     std::to_string(scene.size()));
  }
}

void check_geometry(const VideoCube& scene, const mask::MaskCube& mask) {
  if (!mask.same_geometry(scene)) throw ShapeError("mask and scene geometry differ");
}

void check_plane(const Image& image, const mask::MaskCube& mask) {
  if (image.height != mask.height() || image.width != mask.width()) {
    throw ShapeError("measurement and mask spatial size differ");
  }
}

}  // namespace

void SensorModel::validate() const {
  if (kappa < 1 || kappa > 16) {
    throw std::invalid_argument("sensor bit depth must be in [1, 16], got " +
                                std::to_string(kappa));
  }
  if (!(clip_low < clip_high)) throw std::invalid_argument("clip_low must be below clip_high");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
}

VideoCube modulate(const VideoCube& scene, std::span<const double> mask) {
  check_mask_size(scene, mask);
  VideoCube out(scene.frames(), scene.height(), scene.width());
  const auto in = scene.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    dst[i] = static_cast<float>(mask[i] * static_cast<double>(in[i]));
  }
  return out;
}

VideoCube modulate(const VideoCube& scene, const mask::MaskCube& mask) {
  check_geometry(scene, mask);
  const auto values = mask.values();
  return modulate(scene, values);
}

VideoCube modulate(const VideoCube& scene, const mask::LearnableMask& mask) {
  return modulate(scene, mask.values());
}

Image integrate(const VideoCube& coded) {
  Image out(coded.height(), coded.width());
  for (int t = 0; t < coded.frames(); ++t) {
    const auto frame = coded.frame(t);
    for (std::size_t p = 0; p < frame.size(); ++p) out.data[p] += frame[p];
  }
  return out;
}

Image project(const VideoCube& scene, std::span<const double> mask) {
  check_mask_size(scene, mask);
  Image out(scene.height(), scene.width());
  const std::size_t pixels = scene.pixels();
  const auto x = scene.data();
  for (int t = 0; t < scene.frames(); ++t) {
    const std::size_t base = static_cast<std::size_t>(t) * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      out.data[p] += mask[base + p] * static_cast<double>(x[base + p]);
    }
  }
  return out;
}

std::uint32_t respond_code(double irradiance, const SensorModel& sensor) {
  const double clipped = std::clamp(irradiance, sensor.clip_low, sensor.clip_high);
  const double scaled = (clipped - sensor.clip_low) / (sensor.clip_high - sensor.clip_low);
  return static_cast<std::uint32_t>(std::floor(static_cast<double>(sensor.max_code()) * scaled + 0.5));
}

Measurement respond(const Image& irradiance, const SensorModel& sensor) {
  sensor.validate();
  std::vector<std::uint16_t> codes(irradiance.data.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (std::isnan(irradiance.data[i])) throw std::domain_error("NaN irradiance at sensor");
    codes[i] = static_cast<std::uint16_t>(respond_code(irradiance.data[i], sensor));
  }
  return Measurement(irradiance.height, irradiance.width, sensor.kappa, std::move(codes));
}

Image add_noise(const Image& image, const SensorModel& sensor) {
  sensor.validate();
  Image out = image;
  if (sensor.noise_sigma == 0.0) return out;
  Rng rng(sensor.seed);
  for (auto& value : out.data) value += sensor.noise_sigma * rng.normal();
  return out;
}

Measurement encode(const VideoCube& scene, const mask::MaskCube& mask, const SensorModel& sensor,
                   double aperture) {
  check_geometry(scene, mask);
  if (!(aperture > 0.0)) throw std::invalid_argument("aperture must be positive");
  Image image = project(scene, mask.values());
  for (auto& value : image.data) value *= aperture;
  return respond(add_noise(image, sensor), sensor);
}

double auto_aperture(const mask::MaskCube& mask) {
  std::int64_t total = 0;
  for (auto u : mask.units()) total += u;
  if (total == 0) throw std::domain_error("mask blocks all light; no exposure to scale");
  // mean_{u,v} sum_t value = total / (scale * pixels)
  return static_cast<double>(mask.scale()) * static_cast<double>(mask.pixels()) /
         static_cast<double>(total);
}

Image normalize_measurement(const Image& measurement, const mask::MaskCube& mask) {
  check_plane(measurement, mask);
  const double eps = std::ldexp(1.0, -2 * mask.lambda());
  const double scale = mask.scale();
  Image out(measurement.height, measurement.width);
  for (int u = 0; u < mask.height(); ++u) {
    for (int v = 0; v < mask.width(); ++v) {
      double energy = 0.0;
      for (int t = 0; t < mask.frames(); ++t) {
        const double m = mask.units(t, u, v) / scale;
        energy += m * m;
      }
      out.at(u, v) = measurement.at(u, v) / std::max(energy, eps);
    }
  }
  return out;
}

Image normalize_measurement(const Measurement& measurement, const mask::MaskCube& mask) {
  return normalize_measurement(measurement.normalized(), mask);
}

VideoCube coarse_estimate(const Image& measurement, const mask::MaskCube& mask) {
  const Image normalized = normalize_measurement(measurement, mask);
  VideoCube out(mask.frames(), mask.height(), mask.width());
  for (int t = 0; t < mask.frames(); ++t) {
    for (int u = 0; u < mask.height(); ++u) {
      for (int v = 0; v < mask.width(); ++v) {
        out.at(t, u, v) = static_cast<float>(mask.value(t, u, v) * normalized.at(u, v));
      }
    }
  }
  return out;
}

VideoCube coarse_estimate(const Measurement& measurement, const mask::MaskCube& mask) {
  return coarse_estimate(measurement.normalized(), mask);
}

}  // namespace sci::sensor
