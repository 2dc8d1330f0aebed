#include "sci/gaptv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sci/sensor.hpp"

namespace sci::gaptv {

namespace {

struct Grid {
  int frames, height, width;
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane() * frames; }
};

// Forward differences along one axis; entries past the last index are zero.
void differences(const Grid& g, const double* x, double* dh, double* dv, double* dt) {
  for (int t = 0; t < g.frames; ++t) {
    for (int u = 0; u < g.height; ++u) {
      for (int v = 0; v < g.width; ++v) {
        const std::size_t i = (static_cast<std::size_t>(t) * g.height + u) * g.width + v;
        dh[i] = v + 1 < g.width ? x[i + 1] - x[i] : 0.0;
        dv[i] = u + 1 < g.height ? x[i + g.width] - x[i] : 0.0;
        if (dt) dt[i] = t + 1 < g.frames ? x[i + g.plane()] - x[i] : 0.0;
      }
    }
  }
}

// out = v - D^T p, with D the forward differences above.
void primal(const Grid& g, std::span<const double> v, const std::vector<double>& ph,
            const std::vector<double>& pv, const std::vector<double>* pt, std::vector<double>& out) {
  for (int t = 0; t < g.frames; ++t) {
    for (int u = 0; u < g.height; ++u) {
      for (int c = 0; c < g.width; ++c) {
        const std::size_t i = (static_cast<std::size_t>(t) * g.height + u) * g.width + c;
        double adj = ph[i] + pv[i];
        if (c > 0) adj -= ph[i - 1];
        if (u > 0) adj -= pv[i - g.width];
        if (pt) {
          adj += (*pt)[i];
          if (t > 0) adj -= (*pt)[i - g.plane()];
        }
        out[i] = v[i] + adj;
      }
    }
  }
}

double energy(std::span<const double> x, std::span<const double> v, const Grid& g, double weight,
              bool temporal) {
  double fit = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) fit += (x[i] - v[i]) * (x[i] - v[i]);
  return fit + weight * total_variation(x, g.frames, g.height, g.width, temporal);
}

Image project(std::span<const double> x, const mask::MaskCube& m) {
  Image out(m.height(), m.width());
  const std::size_t plane = static_cast<std::size_t>(m.height()) * m.width();
  for (int t = 0; t < m.frames(); ++t) {
    for (int u = 0; u < m.height(); ++u) {
      for (int v = 0; v < m.width(); ++v) {
        const std::size_t p = static_cast<std::size_t>(u) * m.width() + v;
        out.data[p] += m.value(t, u, v) * x[t * plane + p];
      }
    }
  }
  return out;
}

double residual_norm(const Image& y, std::span<const double> x, const mask::MaskCube& m) {
  const Image phi = project(x, m);
  double s = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) s += (y.data[i] - phi.data[i]) * (y.data[i] - phi.data[i]);
  return std::sqrt(s);
}

// Largest fraction theta in {1, 1/2, ..., 2^-kMaxHalvings} of the step from v
// toward the denoised point that does not increase the data residual.
constexpr int kMaxHalvings = 12;

}  // namespace

void GapTvConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("GAP-TV iterations must be >= 1");
  if (!(tv_weight > 0.0)) throw std::invalid_argument("GAP-TV tv_weight must be > 0");
  if (tv_inner_iterations < 1) throw std::invalid_argument("GAP-TV inner iterations must be >= 1");
}

double total_variation(std::span<const double> x, int frames, int height, int width, bool temporal) {
  const Grid g{frames, height, width};
  double tv = 0.0;
  for (int t = 0; t < frames; ++t) {
    for (int u = 0; u < height; ++u) {
      for (int v = 0; v < width; ++v) {
        const std::size_t i = (static_cast<std::size_t>(t) * height + u) * width + v;
        if (v + 1 < width) tv += std::abs(x[i + 1] - x[i]);
        if (u + 1 < height) tv += std::abs(x[i + width] - x[i]);
        if (temporal && t + 1 < frames) tv += std::abs(x[i + g.plane()] - x[i]);
      }
    }
  }
  return tv;
}

std::vector<double> tv_denoise(std::span<const double> v, int frames, int height, int width,
                               double weight, int inner_iterations, bool temporal, TvTrace* trace) {
  const Grid g{frames, height, width};
  if (v.size() != g.size()) throw ShapeError("tv_denoise: data size does not match geometry");
  if (!(weight > 0.0)) throw std::invalid_argument("tv_denoise weight must be > 0");
  // ||x - v||^2 + w TV(x) = 2 (0.5 ||x - v||^2 + (w/2) TV(x)); the dual
  // variables live in [-w/2, w/2].
  const double bound = weight / 2.0;
  const double step = 1.0 / (temporal ? 12.0 : 8.0);
  std::vector<double> ph(g.size(), 0.0), pv(g.size(), 0.0), pt;
  if (temporal) pt.assign(g.size(), 0.0);
  std::vector<double> dh(g.size()), dv(g.size()), dt(temporal ? g.size() : 0);
  std::vector<double> x(v.begin(), v.end());
  // The dual iteration is not monotone in the primal energy, so the lowest
  // energy primal iterate seen so far is kept and returned.
  std::vector<double> best = x;
  double best_energy = energy(x, v, g, weight, temporal);
  if (trace) trace->energies.push_back(best_energy);
  for (int it = 0; it < inner_iterations; ++it) {
    differences(g, x.data(), dh.data(), dv.data(), temporal ? dt.data() : nullptr);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ph[i] = std::clamp(ph[i] + step * dh[i], -bound, bound);
      pv[i] = std::clamp(pv[i] + step * dv[i], -bound, bound);
      if (temporal) pt[i] = std::clamp(pt[i] + step * dt[i], -bound, bound);
    }
    primal(g, v, ph, pv, temporal ? &pt : nullptr, x);
    const double e = energy(x, v, g, weight, temporal);
    if (e <= best_energy) {
      best = x;
      best_energy = e;
    }
    if (trace) trace->energies.push_back(best_energy);
  }
  return best;
}

VideoCube tv_denoise(const VideoCube& v, double weight, int inner_iterations, bool temporal,
                     TvTrace* trace) {
  std::vector<double> in(v.data().begin(), v.data().end());
  const auto out = tv_denoise(in, v.frames(), v.height(), v.width(), weight, inner_iterations, temporal, trace);
  return VideoCube(v.frames(), v.height(), v.width(), std::vector<float>(out.begin(), out.end()));
}

VideoCube gap_tv_decode(const Image& measurement, const mask::MaskCube& mask, const GapTvConfig& config,
                        GapTvTrace* trace) {
  config.validate();
  if (measurement.height != mask.height() || measurement.width != mask.width()) {
    throw ShapeError("gap_tv_decode: measurement and mask geometry differ");
  }
  const int frames = mask.frames();
  const std::size_t plane = static_cast<std::size_t>(mask.height()) * mask.width();
  const std::size_t n = plane * frames;

  auto back_project = [&](const Image& r, std::vector<double>& x) {
    const Image normalized = sensor::normalize_measurement(r, mask);
    for (int t = 0; t < frames; ++t) {
      for (std::size_t p = 0; p < plane; ++p) {
        const int u = static_cast<int>(p / mask.width());
        const int v = static_cast<int>(p % mask.width());
        x[t * plane + p] += mask.value(t, u, v) * normalized.data[p];
      }
    }
  };

  std::vector<double> x(n, 0.0);
  Image target = config.accelerate ? Image(mask.height(), mask.width()) : measurement;
  double residual = residual_norm(measurement, x, mask);
  std::vector<double> v(n), candidate(n);
  for (int k = 0; k < config.iterations; ++k) {
    const Image phi = project(x, mask);
    Image r(mask.height(), mask.width());
    for (std::size_t i = 0; i < plane; ++i) {
      if (config.accelerate) target.data[i] += measurement.data[i] - phi.data[i];
      r.data[i] = target.data[i] - phi.data[i];
    }
    v = x;
    back_project(r, v);
    const auto denoised = tv_denoise(v, frames, mask.height(), mask.width(), config.tv_weight,
                                     config.tv_inner_iterations, config.temporal_tv);
    bool accepted = false;
    double theta = 1.0;
    for (int h = 0; h <= kMaxHalvings && !accepted; ++h, theta *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) candidate[i] = v[i] + theta * (denoised[i] - v[i]);
      const double res = residual_norm(measurement, candidate, mask);
      if (res <= residual) {
        x.swap(candidate);
        residual = res;
        accepted = true;
        if (trace) trace->step_fractions.push_back(theta);
      }
    }
    if (trace) {
      if (!accepted) trace->step_fractions.push_back(0.0);
      trace->residuals.push_back(residual);
    }
  }

  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(std::clamp(x[i], 0.0, 1.0));
  return VideoCube(frames, mask.height(), mask.width(), std::move(out));
}

VideoCube gap_tv_decode(const Measurement& measurement, const mask::MaskCube& mask,
                        const GapTvConfig& config, double aperture, GapTvTrace* trace) {
  if (!(aperture > 0.0)) throw std::invalid_argument("aperture must be > 0");
  Image y = measurement.normalized();
  for (double& value : y.data) value /= aperture;
  return gap_tv_decode(y, mask, config, trace);
}

}  // namespace sci::gaptv
