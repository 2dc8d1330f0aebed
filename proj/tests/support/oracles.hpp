#pragma once

// Independent reference implementations used as test oracles. They are
// written directly from the mathematical definitions, favoring clarity over
// speed, and share no code with the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Literal transcription of the structural-mask forward pass on one temporal
// column, carried out on real values (grid values are multiples of 1/L).
inline std::vector<double> structural_column(const std::vector<double>& mprime, int lambda) {
  const double L = std::ldexp(1.0, lambda);
  std::vector<double> m(mprime.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::floor(mprime[k] * L + 0.5) / L;
  for (double& v : m) {
    if (v == 1.0) v = 1.0 - 1.0 / L;
  }
  double total = 0.0;
  for (double v : m) total += v;
  if (total == 0.0) {
    for (double& v : m) v = 1.0 / L;
  }
  // Redistribution carried out in grid units (all exact small integers), so
  // the rounding of sigma * w is decided exactly at ties.
  double omega = 0.0;
  for (double v : m) omega += v * L;
  double sigma = omega - L;
  std::vector<double> out(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double u = m[k] * L;
    const double delta = omega > 0.0 ? std::floor((2.0 * sigma * u + omega) / (2.0 * omega)) : 0.0;
    out[k] = (u - delta) / L;
    omega -= u;
    sigma -= delta;
  }
  return out;
}

// Direct 6-loop cross-correlation, x [Ci, D, H, W], w [Co, Ci, kd, kh, kw].
inline std::vector<double> conv3d(const std::vector<double>& x, std::array<int, 4> xs,
                                  const std::vector<double>& w, std::array<int, 5> ws,
                                  const std::vector<double>& bias, std::array<int, 3> stride,
                                  std::array<int, 3> pad, std::array<int, 4>* out_shape = nullptr) {
  const int ci = xs[0], D = xs[1], H = xs[2], W = xs[3];
  const int co = ws[0], kd = ws[2], kh = ws[3], kw = ws[4];
  const int od = (D + 2 * pad[0] - kd) / stride[0] + 1;
  const int oh = (H + 2 * pad[1] - kh) / stride[1] + 1;
  const int ow = (W + 2 * pad[2] - kw) / stride[2] + 1;
  if (out_shape) *out_shape = {co, od, oh, ow};
  std::vector<double> y(static_cast<std::size_t>(co) * od * oh * ow, 0.0);
  for (int o = 0; o < co; ++o)
    for (int z = 0; z < od; ++z)
      for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (int i = 0; i < ci; ++i)
            for (int a = 0; a < kd; ++a)
              for (int b = 0; b < kh; ++b)
                for (int e = 0; e < kw; ++e) {
                  const int zz = z * stride[0] - pad[0] + a;
                  const int rr = r * stride[1] - pad[1] + b;
                  const int cc = c * stride[2] - pad[2] + e;
                  if (zz < 0 || zz >= D || rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                  acc += x[((static_cast<std::size_t>(i) * D + zz) * H + rr) * W + cc] *
                         w[(((static_cast<std::size_t>(o) * ci + i) * kd + a) * kh + b) * kw + e];
                }
          y[((static_cast<std::size_t>(o) * od + z) * oh + r) * ow + c] = acc;
        }
  return y;
}

// Explicit sensing matrix Phi = [diag(M_1), ..., diag(M_B)] of size HW x BHW,
// for a frame-major mask.
inline std::vector<std::vector<double>> sensing_matrix(const std::vector<double>& mask, int frames, int pixels) {
  std::vector<std::vector<double>> phi(static_cast<std::size_t>(pixels),
                                       std::vector<double>(static_cast<std::size_t>(frames) * pixels, 0.0));
  for (int t = 0; t < frames; ++t)
    for (int p = 0; p < pixels; ++p) phi[p][static_cast<std::size_t>(t) * pixels + p] = mask[static_cast<std::size_t>(t) * pixels + p];
  return phi;
}

inline std::vector<double> apply(const std::vector<std::vector<double>>& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

// Intensity-weighted centroid of one frame.
inline std::array<double, 2> centroid(const float* frame, int height, int width, double background) {
  double sx = 0.0, sy = 0.0, total = 0.0;
  for (int u = 0; u < height; ++u)
    for (int v = 0; v < width; ++v) {
      const double w = std::abs(frame[u * width + v] - background);
      sx += w * (v + 0.5);
      sy += w * (u + 0.5);
      total += w;
    }
  return {sx / total, sy / total};
}

}  // namespace oracle
