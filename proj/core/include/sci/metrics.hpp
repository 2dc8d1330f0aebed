#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sci/video.hpp"

namespace sci::metrics {

/// PSNR reported for an exact match (the MSE would be zero).
inline constexpr double kPsnrCap = 100.0;

struct FrameScores {
  std::vector<double> per_frame;
  double mean = 0.0;
};

/// 10 log10(1 / MSE) per frame for data in [0, 1], capped at kPsnrCap.
FrameScores psnr(const VideoCube& a, const VideoCube& b);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Gaussian-window SSIM over the valid region of each frame, averaged per frame.
/// Throws std::invalid_argument when a frame is smaller than the window.
FrameScores ssim(const VideoCube& a, const VideoCube& b, const SsimConfig& config = {});

struct DecileLevels {
  double low = 0.0;
  double high = 0.0;
  std::size_t pixels = 0;
  std::size_t reference_levels = 0;
  std::size_t reconstructed_levels = 0;
};

/// Distinct kappa-bit levels present in a reconstruction and its reference,
/// overall and per brightness decile of the reference.
struct DynamicRangeReport {
  int kappa = 8;
  std::size_t reference_levels = 0;
  std::size_t reconstructed_levels = 0;
  double mean_abs_level_error = 0.0;
  std::array<DecileLevels, 10> deciles{};

  std::string to_json() const;
  /// One row per decile.
  std::string to_csv() const;
};

/// Quantizes both cubes with floor((2^kappa - 1) clip(x) + 0.5).
DynamicRangeReport dynamic_range_report(const VideoCube& reconstruction, const VideoCube& reference,
                                        int kappa);

struct QualityReport {
  FrameScores psnr;
  FrameScores ssim;
  std::size_t videos = 0;

  std::string to_json() const;
  /// Columns: frame, psnr, ssim.
  std::string to_csv() const;
};

/// Per-frame scores averaged over a set of (reconstruction, reference) pairs.
QualityReport evaluate_quality(const std::vector<VideoCube>& reconstructions,
                               const std::vector<VideoCube>& references, const SsimConfig& config = {});

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sci::metrics
