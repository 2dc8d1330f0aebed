#include "sci/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sci/random.hpp"

namespace sci::scenes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Length of [a, a + len) inside the unit cell [cell, cell + 1).
double overlap(double cell, double a, double len) {
  return std::max(0.0, std::min(cell + 1.0, a + len) - std::max(cell, a));
}

// Values of a linear ramp through the pixel centres, scaled so the extreme
// centres hit lo and hi exactly.
std::vector<double> ramp(int height, int width, double angle, double lo, double hi) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<double> proj(static_cast<std::size_t>(height) * width);
  double pmin = 1e300, pmax = -1e300;
  for (int u = 0; u < height; ++u) {
    for (int v = 0; v < width; ++v) {
      const double p = (v + 0.5) * c + (u + 0.5) * s;
      proj[static_cast<std::size_t>(u) * width + v] = p;
      pmin = std::min(pmin, p);
      pmax = std::max(pmax, p);
    }
  }
  for (double& p : proj) p = pmax > pmin ? lo + (hi - lo) * (p - pmin) / (pmax - pmin) : lo;
  return proj;
}

struct Levels {
  std::vector<double> background;
  double object;
};

Levels draw_levels(const SyntheticScene& spec, int height, int width, Rng& rng) {
  if (!spec.gradient_background) {
    return {std::vector<double>(static_cast<std::size_t>(height) * width, spec.brightness_low),
            spec.brightness_high};
  }
  const double angle = rng.uniform(0.0, kTwoPi);
  auto background = ramp(height, width, angle, spec.brightness_low, spec.brightness_high);
  return {std::move(background), rng.uniform(spec.brightness_low, spec.brightness_high)};
}

VideoCube moving_square(const SyntheticScene& spec, int frames, int height, int width, Rng& rng) {
  const double side = spec.size * std::min(height, width);
  const double angle = rng.uniform(0.0, kTwoPi);
  const double vx = spec.velocity * std::cos(angle);
  const double vy = spec.velocity * std::sin(angle);
  const double span_x = side + std::abs(vx) * (frames - 1);
  const double span_y = side + std::abs(vy) * (frames - 1);
  if (span_x > width || span_y > height) {
    throw std::invalid_argument("moving square of side " + std::to_string(side) + " at " +
                                std::to_string(spec.velocity) + " px/frame leaves a " +
                                std::to_string(height) + "x" + std::to_string(width) + " frame within " +
                                std::to_string(frames) + " frames");
  }
  double x0 = rng.uniform(0.0, width - span_x);
  double y0 = rng.uniform(0.0, height - span_y);
  if (vx < 0) x0 += std::abs(vx) * (frames - 1);
  if (vy < 0) y0 += std::abs(vy) * (frames - 1);
  const Levels levels = draw_levels(spec, height, width, rng);

  VideoCube out(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    const double ax = x0 + vx * t;
    const double ay = y0 + vy * t;
    for (int u = 0; u < height; ++u) {
      const double cy = overlap(u, ay, side);
      for (int v = 0; v < width; ++v) {
        const double cover = cy * overlap(v, ax, side);
        const double bg = levels.background[static_cast<std::size_t>(u) * width + v];
        out.at(t, u, v) = static_cast<float>(bg + cover * (levels.object - bg));
      }
    }
  }
  return out;
}

// Reflects a coordinate into [lo, hi].
double bounce(double p, double lo, double hi) {
  const double len = hi - lo;
  if (len <= 0.0) return lo;
  double q = std::fmod(p - lo, 2.0 * len);
  if (q < 0) q += 2.0 * len;
  return lo + (q <= len ? q : 2.0 * len - q);
}

VideoCube bouncing_disc(const SyntheticScene& spec, int frames, int height, int width, Rng& rng) {
  const double radius = spec.size * std::min(height, width) / 2.0;
  const double angle = rng.uniform(0.0, kTwoPi);
  const double vx = spec.velocity * std::cos(angle);
  const double vy = spec.velocity * std::sin(angle);
  const double cx0 = rng.uniform(radius, width - radius);
  const double cy0 = rng.uniform(radius, height - radius);
  const Levels levels = draw_levels(spec, height, width, rng);
  constexpr int kSub = 4;

  VideoCube out(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    const double cx = bounce(cx0 + vx * t, radius, width - radius);
    const double cy = bounce(cy0 + vy * t, radius, height - radius);
    for (int u = 0; u < height; ++u) {
      for (int v = 0; v < width; ++v) {
        int inside = 0;
        for (int i = 0; i < kSub; ++i) {
          for (int j = 0; j < kSub; ++j) {
            const double py = u + (i + 0.5) / kSub - cy;
            const double px = v + (j + 0.5) / kSub - cx;
            inside += px * px + py * py <= radius * radius ? 1 : 0;
          }
        }
        const double cover = static_cast<double>(inside) / (kSub * kSub);
        const double bg = levels.background[static_cast<std::size_t>(u) * width + v];
        out.at(t, u, v) = static_cast<float>(bg + cover * (levels.object - bg));
      }
    }
  }
  return out;
}

VideoCube drifting_texture(const SyntheticScene& spec, int frames, int height, int width, Rng& rng) {
  constexpr int kWaves = 3;
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves;
  double total = 0.0;
  const double size = std::min(height, width);
  for (int k = 0; k < kWaves; ++k) {
    const double cycles = rng.uniform(1.0, 4.0);
    const double orientation = rng.uniform(0.0, kTwoPi);
    const double amplitude = rng.uniform(0.5, 1.0);
    waves.push_back({kTwoPi * cycles / size * std::cos(orientation),
                     kTwoPi * cycles / size * std::sin(orientation), rng.uniform(0.0, kTwoPi), amplitude});
    total += amplitude;
  }
  const double drift = rng.uniform(0.0, kTwoPi);
  const double dx = spec.velocity * std::cos(drift);
  const double dy = spec.velocity * std::sin(drift);
  const double lo = spec.brightness_low;
  const double hi = spec.brightness_high;

  VideoCube out(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    for (int u = 0; u < height; ++u) {
      for (int v = 0; v < width; ++v) {
        const double px = v + 0.5 - dx * t;
        const double py = u + 0.5 - dy * t;
        double s = 0.0;
        for (const auto& w : waves) s += w.amplitude * std::sin(w.kx * px + w.ky * py + w.phase);
        out.at(t, u, v) = static_cast<float>(lo + (hi - lo) * (0.5 + 0.5 * s / total));
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::moving_square: return "moving-square";
    case SceneKind::bouncing_disc: return "bouncing-disc";
    case SceneKind::drifting_texture: return "drifting-texture";
  }
  return "unknown";
}

std::optional<SceneKind> parse_scene_kind(std::string_view text) {
  for (auto kind : {SceneKind::moving_square, SceneKind::bouncing_disc, SceneKind::drifting_texture}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

void SyntheticScene::validate() const {
  if (!(size > 0.0 && size <= 1.0)) throw std::invalid_argument("scene size must be in (0, 1]");
  if (!(velocity >= 0.0) || !std::isfinite(velocity)) {
    throw std::invalid_argument("scene velocity must be finite and >= 0");
  }
  if (!(brightness_low >= 0.0 && brightness_high <= 1.0 && brightness_low <= brightness_high)) {
    throw std::invalid_argument("brightness range must satisfy 0 <= low <= high <= 1");
  }
}

VideoCube synthesize_scene(const SyntheticScene& spec, int frames, int height, int width,
                           std::uint64_t seed) {
  spec.validate();
  if (frames <= 0 || height <= 0 || width <= 0) throw std::invalid_argument("scene geometry must be positive");
  Rng rng(seed);
  switch (spec.kind) {
    case SceneKind::moving_square: return moving_square(spec, frames, height, width, rng);
    case SceneKind::bouncing_disc: return bouncing_disc(spec, frames, height, width, rng);
    case SceneKind::drifting_texture: return drifting_texture(spec, frames, height, width, rng);
  }
  throw std::invalid_argument("unknown scene kind");
}

std::vector<VideoCube> synthesize_dataset(const SyntheticScene& spec, int count, int frames, int height,
                                          int width, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("scene count must be >= 0");
  std::vector<VideoCube> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    out.push_back(synthesize_scene(spec, frames, height, width, derive_seed(seed, static_cast<std::uint64_t>(k))));
  }
  return out;
}

std::vector<VideoCube> synthesize_suite(int count, int frames, int height, int width, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("scene count must be >= 0");
  std::vector<VideoCube> out;
  for (int k = 0; k < count; ++k) {
    SyntheticScene spec;
    switch (k % 3) {
      case 0: spec.kind = SceneKind::moving_square; spec.velocity = 1.0; break;
      case 1: spec.kind = SceneKind::bouncing_disc; spec.velocity = 1.5; spec.size = 0.35; break;
      default: spec.kind = SceneKind::drifting_texture; spec.velocity = 1.0; break;
    }
    out.push_back(synthesize_scene(spec, frames, height, width, derive_seed(seed, static_cast<std::uint64_t>(k))));
  }
  return out;
}

}  // namespace sci::scenes
