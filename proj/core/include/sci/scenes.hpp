#pragma once

// Deterministic synthetic video scenes: a desk-scale stand-in for natural
// video datasets.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sci/video.hpp"

namespace sci::scenes {

enum class SceneKind { moving_square, bouncing_disc, drifting_texture };

std::string to_string(SceneKind kind);
/// Accepts "moving-square", "bouncing-disc", "drifting-texture".
std::optional<SceneKind> parse_scene_kind(std::string_view text);

struct SyntheticScene {
  SceneKind kind = SceneKind::moving_square;
  /// Square side or disc diameter as a fraction of min(H, W).
  double size = 0.3;
  /// Object speed in pixels per frame (texture drift for drifting-texture).
  double velocity = 1.0;
  double brightness_low = 0.0;
  double brightness_high = 1.0;
  /// Background is a linear ramp spanning the brightness range and the object
  /// level is random. When false the background is brightness_low and the
  /// object brightness_high.
  bool gradient_background = true;

  /// Throws std::invalid_argument for an illegal spec.
  void validate() const;
};

/// One B x H x W cube. Throws std::invalid_argument when the moving square
/// cannot stay inside the frame for B frames at the given speed.
VideoCube synthesize_scene(const SyntheticScene& spec, int frames, int height, int width,
                           std::uint64_t seed);

/// `count` cubes from one spec; cube k uses derive_seed(seed, k).
std::vector<VideoCube> synthesize_dataset(const SyntheticScene& spec, int count, int frames, int height,
                                          int width, std::uint64_t seed);

/// Mixed suite cycling through all three kinds with per-kind defaults.
std::vector<VideoCube> synthesize_suite(int count, int frames, int height, int width, std::uint64_t seed);

}  // namespace sci::scenes
