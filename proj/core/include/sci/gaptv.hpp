#pragma once

// Generalized alternating projection with total-variation denoising: a
// training-free reconstruction baseline.

#include <span>
#include <vector>

#include "sci/mask.hpp"
#include "sci/video.hpp"

namespace sci::gaptv {

struct GapTvConfig {
  int iterations = 100;
  /// Weight w in ||x - v||^2 + w TV(x), for data in [0, 1].
  double tv_weight = 0.07;
  int tv_inner_iterations = 5;
  /// Accelerated GAP: the measurement is replaced by y_k = y_{k-1} + (y - Phi x).
  bool accelerate = false;
  /// Adds frame-to-frame differences to the TV term.
  bool temporal_tv = false;

  void validate() const;
};

/// ||y - Phi x_k|| after every outer iteration, and the fraction of the step
/// toward the denoised point that was taken (1 unless the residual would grow;
/// 0 when no fraction kept it from growing).
struct GapTvTrace {
  std::vector<double> residuals;
  std::vector<double> step_fractions;
};

/// Reconstructs from a measurement in irradiance units (digital / max code,
/// divided by the aperture used at capture). Output is clipped to [0, 1].
VideoCube gap_tv_decode(const Image& measurement, const mask::MaskCube& mask,
                        const GapTvConfig& config = {}, GapTvTrace* trace = nullptr);
VideoCube gap_tv_decode(const Measurement& measurement, const mask::MaskCube& mask,
                        const GapTvConfig& config = {}, double aperture = 1.0,
                        GapTvTrace* trace = nullptr);

/// Energy ||x - v||^2 + weight TV(x) of the returned iterate, at the start and
/// after every inner iteration.
struct TvTrace {
  std::vector<double> energies;
};

/// Anisotropic TV: sum of absolute horizontal and vertical differences, plus
/// temporal differences when requested.
double total_variation(std::span<const double> x, int frames, int height, int width, bool temporal);

/// Approximately minimizes ||x - v||^2 + weight TV(x) by projected gradient
/// on the dual (iterative clipping). Returns the lowest-energy primal iterate.
std::vector<double> tv_denoise(std::span<const double> v, int frames, int height, int width,
                               double weight, int inner_iterations, bool temporal = false,
                               TvTrace* trace = nullptr);
VideoCube tv_denoise(const VideoCube& v, double weight, int inner_iterations, bool temporal = false,
                     TvTrace* trace = nullptr);

}  // namespace sci::gaptv
