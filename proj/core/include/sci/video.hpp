#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sci {

/// Thrown when two operands disagree on geometry.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Frame-major B x H x W cube of normalized irradiance. Storage is float32;
/// callers that need wider accumulation convert on read.
class VideoCube {
 public:
  VideoCube() = default;
  VideoCube(int frames, int height, int width, float fill = 0.0f);
  VideoCube(int frames, int height, int width, std::vector<float> data);

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int t, int u, int v) { return data_[index(t, u, v)]; }
  float at(int t, int u, int v) const { return data_[index(t, u, v)]; }

  std::span<float> frame(int t);
  std::span<const float> frame(int t) const;

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const VideoCube& other) const noexcept {
    return frames_ == other.frames_ && height_ == other.height_ &&
           width_ == other.width_;
  }
  bool operator==(const VideoCube&) const = default;

 private:
  std::size_t index(int t, int u, int v) const noexcept {
    return (static_cast<std::size_t>(t) * height_ + u) * width_ + v;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Single H x W floating plane (sensor-side images, normalized measurements).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int u, int v) { return data[static_cast<std::size_t>(u) * width + v]; }
  double at(int u, int v) const { return data[static_cast<std::size_t>(u) * width + v]; }
};

/// Quantized snapshot. `digital` holds sensor codes in [0, 2^kappa - 1].
class Measurement {
 public:
  Measurement() = default;
  Measurement(int height, int width, int kappa, std::vector<std::uint16_t> digital);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int kappa() const noexcept { return kappa_; }
  std::uint32_t max_code() const noexcept { return (1u << kappa_) - 1u; }

  std::span<const std::uint16_t> digital() const noexcept { return digital_; }
  std::uint16_t code(int u, int v) const {
    return digital_[static_cast<std::size_t>(u) * width_ + v];
  }

  /// digital / (2^kappa - 1), evaluated in double.
  double normalized(int u, int v) const {
    return static_cast<double>(code(u, v)) / static_cast<double>(max_code());
  }
  Image normalized() const;

  bool operator==(const Measurement&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int kappa_ = 8;
  std::vector<std::uint16_t> digital_;
};

}  // namespace sci
