#include "sci/video.hpp"

#include <cmath>
#include <string>

namespace sci {

namespace {

void check_dims(int frames, int height, int width) {
  if (frames <= 0 || height <= 0 || width <= 0) {
    throw ShapeError("video dimensions must be positive, got " +
                     std::to_string(frames) + "x" + std::to_string(height) + "x" +
                     std::to_string(width));
  }
}

}  // namespace

VideoCube::VideoCube(int frames, int height, int width, float fill)
    : frames_(frames), height_(height), width_(width) {
  check_dims(frames, height, width);
  data_.assign(static_cast<std::size_t>(frames) * height * width, fill);
}

VideoCube::VideoCube(int frames, int height, int width, std::vector<float> data)
    : frames_(frames), height_(height), width_(width), data_(std::move(data)) {
  check_dims(frames, height, width);
  if (data_.size() != static_cast<std::size_t>(frames) * height * width) {
    throw ShapeError("video payload has " + std::to_string(data_.size()) +
                     " values, expected " +
                     std::to_string(static_cast<std::size_t>(frames) * height * width));
  }
  for (float value : data_) {
    if (!std::isfinite(value)) throw std::invalid_argument("video contains non-finite values");
  }
}

std::span<float> VideoCube::frame(int t) {
  return std::span<float>(data_).subspan(static_cast<std::size_t>(t) * pixels(), pixels());
}

std::span<const float> VideoCube::frame(int t) const {
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(t) * pixels(),
                                               pixels());
}

Measurement::Measurement(int height, int width, int kappa, std::vector<std::uint16_t> digital)
    : height_(height), width_(width), kappa_(kappa), digital_(std::move(digital)) {
  if (height <= 0 || width <= 0) throw ShapeError("measurement dimensions must be positive");
  if (kappa < 1 || kappa > 16) {
    throw std::invalid_argument("sensor bit depth must be in [1, 16], got " +
                                std::to_string(kappa));
  }
  if (digital_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("measurement payload does not match H x W");
  }
  for (auto code : digital_) {
    if (code > max_code()) {
      throw std::invalid_argument("measurement code " + std::to_string(code) +
                                  " exceeds 2^kappa - 1");
    }
  }
}

Image Measurement::normalized() const {
  Image out(height_, width_);
  const double denom = static_cast<double>(max_code());
  for (std::size_t i = 0; i < digital_.size(); ++i) out.data[i] = digital_[i] / denom;
  return out;
}

}  // namespace sci
