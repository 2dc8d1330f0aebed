#pragma once

#include <cstddef>

#include "sci/res2former.hpp"

namespace res2former_count {

inline std::size_t conv(std::size_t in, std::size_t out, std::size_t taps) { return in * out * taps + out; }

inline std::size_t tsa(std::size_t g) { return conv(g, g, 9) + 4 * g * (g / 2) + conv(g, g, 27) + conv(g, g, 1); }

inline std::size_t restsa(std::size_t c, std::size_t levels) { return levels * tsa(c / levels) + conv(c, c, 1); }

// Closed-form parameter count of the decoder described by `cfg`.
inline std::size_t analytic(const sci::net::Res2formerConfig& cfg) {
  const std::size_t c = cfg.channels, p = cfg.levels, n1 = cfg.encoder_depth, n2 = cfg.bottleneck_depth;
  const std::size_t s2 = static_cast<std::size_t>(cfg.embed_stride * cfg.embed_stride);
  return conv(cfg.input_channels(), c, 27) + conv(c, c, 9) + n1 * restsa(c, p) + conv(c, 2 * c, 27) +
         n1 * restsa(2 * c, p) + conv(2 * c, 4 * c, 27) + n2 * restsa(4 * c, p) + conv(4 * c, 8 * c, 1) +
         n1 * restsa(2 * c, p) + conv(2 * c, 4 * c, 1) + n1 * restsa(c, p) + conv(c / s2, c / s2, 1) +
         conv(c / s2, 1, 27);
}

}  // namespace res2former_count
