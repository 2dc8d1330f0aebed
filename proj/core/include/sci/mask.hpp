#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sci/video.hpp"

namespace sci::mask {

/// Continuous mask parameters M' in [0,1], frame-major B x H x W.
class LearnableMask {
 public:
  LearnableMask() = default;
  LearnableMask(int frames, int height, int width, std::vector<double> values);

  static LearnableMask uniform_random(int frames, int height, int width, std::uint64_t seed);

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  double at(int t, int u, int v) const {
    return values_[(static_cast<std::size_t>(t) * height_ + u) * width_ + v];
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Projects every value back onto [0,1].
  void clamp();

 private:
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Lambda-bit mask stored as exact integer units. value = units / scale().
///
/// For lambda >= 2, scale() = 2^lambda and units lie in [0, 2^lambda - 1].
/// For lambda = 1 the grid is {0, 1}, so scale() = 1 and units are the bits.
/// A structural mask additionally satisfies sum_t units(u,v,t) == scale().
class MaskCube {
 public:
  MaskCube() = default;
  MaskCube(int frames, int height, int width, int lambda, std::vector<std::int32_t> units,
           bool structural);

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int lambda() const noexcept { return lambda_; }
  bool structural() const noexcept { return structural_; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  std::int32_t scale() const noexcept { return lambda_ == 1 ? 1 : (1 << lambda_); }
  std::int32_t max_units() const noexcept { return lambda_ == 1 ? 1 : scale() - 1; }

  std::int32_t units(int t, int u, int v) const { return units_[index(t, u, v)]; }
  double value(int t, int u, int v) const {
    return static_cast<double>(units(t, u, v)) / static_cast<double>(scale());
  }
  std::span<const std::int32_t> units() const noexcept { return units_; }

  /// Temporal sum of units at a pixel.
  std::int64_t column_units(int u, int v) const;
  /// Transmittance values in frame-major order.
  std::vector<double> values() const;

  bool same_geometry(const VideoCube& video) const noexcept {
    return frames_ == video.frames() && height_ == video.height() && width_ == video.width();
  }
  bool operator==(const MaskCube&) const = default;

 private:
  std::size_t index(int t, int u, int v) const noexcept {
    return (static_cast<std::size_t>(t) * height_ + u) * width_ + v;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  int lambda_ = 1;
  bool structural_ = false;
  std::vector<std::int32_t> units_;
};

struct Violation {
  enum class Kind { grid, sum };
  Kind kind;
  int t;  // -1 for sum violations
  int u;
  int v;
  std::int64_t units;  // offending entry, or the column sum
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t grid_violations() const;
  std::size_t sum_violations() const;
};

MaskCube random_binary(int frames, int height, int width, double p, std::uint64_t seed);
MaskCube random_structural(int frames, int height, int width, int lambda, std::uint64_t seed);

/// Grid projection (rounding, top-level remap, empty-column fill). The result
/// is on the lambda-bit grid but the temporal sum is not yet constrained.
MaskCube discretize(const LearnableMask& mprime, int lambda);

/// Discretization followed by excess redistribution and a deterministic repair
/// pass. Every output satisfies the structural invariants exactly.
MaskCube structuralize(const LearnableMask& mprime, int lambda);

/// Checks grid membership of every entry and, for structural masks, the
/// temporal sum. Never throws.
ValidationReport validate(const MaskCube& mask);

/// Representable brightness levels per frame at each pixel.
///
/// Without an aperture, the pixel's own exposure sets the gain:
/// floor(2^kappa / max(sum_t value, 2^-lambda)). With a global aperture gain
/// a, every frame maps onto floor(2^kappa * a) codes. Both are capped at 2^kappa.
std::vector<std::int64_t> effective_levels(const MaskCube& mask, int kappa,
                                           std::optional<double> aperture = std::nullopt);

// Bit-plane export for DMD pattern sequencers: for each time slot, lambda
// planes most-significant first; rows packed MSB-first into whole bytes.
struct DmdPlanes {
  int frames = 0;
  int height = 0;
  int width = 0;
  int lambda = 1;
  std::vector<std::uint8_t> bytes;

  std::size_t row_bytes() const noexcept { return (static_cast<std::size_t>(width) + 7) / 8; }
  std::size_t plane_bytes() const noexcept { return row_bytes() * height; }
  std::size_t plane_count() const noexcept { return static_cast<std::size_t>(frames) * lambda; }
  bool bit(std::size_t plane, int u, int v) const;
};

DmdPlanes to_dmd_planes(const MaskCube& mask);
/// Reassembles units from planes; the structural flag is taken from the caller.
MaskCube from_dmd_planes(const DmdPlanes& planes, bool structural);

void export_dmd(const MaskCube& mask, const std::filesystem::path& path);
DmdPlanes import_dmd(const std::filesystem::path& path);

/// Persists units as an int64 SCIT container plus manifest (lambda, structural).
void save_mask(const std::filesystem::path& path, const MaskCube& mask);
MaskCube load_mask(const std::filesystem::path& path);

}  // namespace sci::mask
