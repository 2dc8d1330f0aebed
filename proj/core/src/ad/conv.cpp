#include <algorithm>
#include <stdexcept>

#include "sci/ad/ops.hpp"
#include "sci/parallel.hpp"

namespace sci::ad {

namespace {

struct ConvGeometry {
  int in_channels, depth, height, width;
  int out_channels, kd, kh, kw;
  int sd, sh, sw;
  int pd, ph, pw;
  int out_depth, out_height, out_width;

  std::size_t in_plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t in_volume() const { return in_plane() * depth; }
  std::size_t out_plane() const { return static_cast<std::size_t>(out_height) * out_width; }
  std::size_t out_volume() const { return out_plane() * out_depth; }
  std::size_t kernel_volume() const { return static_cast<std::size_t>(kd) * kh * kw; }
};

ConvGeometry make_geometry(const Tensor& x, const Tensor& weight, std::array<int, 3> stride,
                           std::array<int, 3> padding) {
  if (x.ndim() != 4 || weight.ndim() != 5) {
    throw std::invalid_argument("conv3d expects x [C,D,H,W] and weight [O,C,kd,kh,kw], got " +
                                to_string(x.shape()) + " and " + to_string(weight.shape()));
  }
  ConvGeometry g{};
  g.in_channels = x.dim(0);
  g.depth = x.dim(1);
  g.height = x.dim(2);
  g.width = x.dim(3);
  g.out_channels = weight.dim(0);
  if (weight.dim(1) != g.in_channels) {
    throw std::invalid_argument("conv3d: weight expects " + std::to_string(weight.dim(1)) +
                                " input channels, input has " + std::to_string(g.in_channels));
  }
  g.kd = weight.dim(2);
  g.kh = weight.dim(3);
  g.kw = weight.dim(4);
  g.sd = stride[0];
  g.sh = stride[1];
  g.sw = stride[2];
  g.pd = padding[0];
  g.ph = padding[1];
  g.pw = padding[2];
  if (g.sd < 1 || g.sh < 1 || g.sw < 1) throw std::invalid_argument("conv3d stride must be >= 1");
  if (g.pd < 0 || g.ph < 0 || g.pw < 0) throw std::invalid_argument("conv3d padding must be >= 0");
  g.out_depth = (g.depth + 2 * g.pd - g.kd) / g.sd + 1;
  g.out_height = (g.height + 2 * g.ph - g.kh) / g.sh + 1;
  g.out_width = (g.width + 2 * g.pw - g.kw) / g.sw + 1;
  if (g.depth + 2 * g.pd < g.kd || g.height + 2 * g.ph < g.kh || g.width + 2 * g.pw < g.kw) {
    throw std::invalid_argument("conv3d kernel larger than padded input");
  }
  return g;
}

// Every stride is handled the same way. The zero-padded input is split into
// sh*sw polyphase components, so a kernel tap (a, b, c) reads component
// (b % sh, c % sw) at offset (b / sh, c / sw) with unit stride. Output rows
// are computed at the component width and cropped afterwards; the extra
// columns of a widened gradient are kept at zero.
struct Phases {
  int dp, hq, wq, sh, sw;
  std::size_t plane() const { return static_cast<std::size_t>(hq) * wq; }
  std::size_t component() const { return plane() * dp; }
  std::size_t channel() const { return component() * sh * sw; }
};

Phases make_phases(const ConvGeometry& g) {
  const int hp = g.height + 2 * g.ph;
  const int wp = g.width + 2 * g.pw;
  return {g.depth + 2 * g.pd, (hp + g.sh - 1) / g.sh, (wp + g.sw - 1) / g.sw, g.sh, g.sw};
}

// Index of padded input element (d, h, w) of one channel in the phase layout.
std::size_t phase_index(const Phases& p, int d, int h, int w) {
  const std::size_t comp = static_cast<std::size_t>(h % p.sh) * p.sw + w % p.sw;
  return comp * p.component() + d * p.plane() + static_cast<std::size_t>(h / p.sh) * p.wq + w / p.sw;
}

// Offset of the source window for tap (a, b, c) at output depth od.
std::size_t tap_offset(const ConvGeometry& g, const Phases& p, int od, int a, int b, int c) {
  return phase_index(p, od * g.sd + a, b, c);
}

std::size_t wide_plane(const ConvGeometry& g, const Phases& p) {
  return static_cast<std::size_t>(g.out_height) * p.wq;
}

// Elements an axpy covers: every output row at the component width, minus
// the tail of the last row.
std::size_t wide_span(const ConvGeometry& g, const Phases& p) {
  return static_cast<std::size_t>(g.out_height - 1) * p.wq + g.out_width;
}

// Phase-layout offset of every padded column and of every padded row's start.
struct PhaseOffsets {
  std::vector<std::size_t> column;
  std::vector<std::size_t> row;
};

PhaseOffsets phase_offsets(const ConvGeometry& g, const Phases& p) {
  PhaseOffsets o;
  for (int w = 0; w < g.width; ++w) {
    const int v = w + g.pw;
    o.column.push_back(static_cast<std::size_t>(v % p.sw) * p.component() + v / p.sw);
  }
  for (int h = 0; h < g.height; ++h) {
    const int u = h + g.ph;
    o.row.push_back(static_cast<std::size_t>(u % p.sh) * p.sw * p.component() +
                    static_cast<std::size_t>(u / p.sh) * p.wq);
  }
  return o;
}

std::vector<double> to_phases(const ConvGeometry& g, const Phases& p, const double* x) {
  const PhaseOffsets o = phase_offsets(g, p);
  std::vector<double> out(p.channel() * g.in_channels, 0.0);
  for (int ci = 0; ci < g.in_channels; ++ci) {
    for (int d = 0; d < g.depth; ++d) {
      double* base = out.data() + ci * p.channel() + (d + g.pd) * p.plane();
      for (int h = 0; h < g.height; ++h) {
        const double* src = x + ((static_cast<std::size_t>(ci) * g.depth + d) * g.height + h) * g.width;
        double* row = base + o.row[h];
        for (int w = 0; w < g.width; ++w) row[o.column[w]] = src[w];
      }
    }
  }
  return out;
}

// Span tile kept resident in L1 while all taps accumulate into it.
constexpr std::size_t kTile = 512;

inline void axpy(double* dst, const double* src, double a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) dst[j] += a * src[j];
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

std::vector<double> conv_forward(const ConvGeometry& g, const double* x, const double* w,
                                 const double* bias, std::size_t w_stride) {
  const Phases p = make_phases(g);
  const std::vector<double> xp = to_phases(g, p, x);
  const std::size_t span = wide_span(g, p);
  const std::size_t plane = wide_plane(g, p);
  std::vector<double> out(static_cast<std::size_t>(g.out_channels) * g.out_volume());
  parallel_for(static_cast<std::size_t>(g.out_channels), [&](std::size_t begin, std::size_t end) {
    std::vector<double> wide(plane * g.out_depth);
    for (std::size_t co = begin; co < end; ++co) {
      std::fill(wide.begin(), wide.end(), 0.0);
      for (int od = 0; od < g.out_depth; ++od) {
        for (std::size_t j0 = 0; j0 < span; j0 += kTile) {
          const std::size_t len = std::min(kTile, span - j0);
          double* dst = wide.data() + od * plane + j0;
          for (int ci = 0; ci < g.in_channels; ++ci) {
            const double* xc = xp.data() + ci * p.channel() + j0;
            const double* wc = w + co * w_stride + ci * g.kernel_volume();
            for (int a = 0; a < g.kd; ++a) {
              for (int b = 0; b < g.kh; ++b) {
                for (int c = 0; c < g.kw; ++c) {
                  axpy(dst, xc + tap_offset(g, p, od, a, b, c), wc[(a * g.kh + b) * g.kw + c], len);
                }
              }
            }
          }
        }
      }
      double* dst = out.data() + co * g.out_volume();
      const double bv = bias ? bias[co] : 0.0;
      for (int od = 0; od < g.out_depth; ++od) {
        for (int oh = 0; oh < g.out_height; ++oh) {
          const double* row = wide.data() + od * plane + static_cast<std::size_t>(oh) * p.wq;
          for (int ow = 0; ow < g.out_width; ++ow) *dst++ = row[ow] + bv;
        }
      }
    }
  });
  return out;
}

std::vector<double> widen_grad(const ConvGeometry& g, const Phases& p, const double* dy) {
  const std::size_t plane = wide_plane(g, p);
  std::vector<double> wide(plane * g.out_depth * g.out_channels, 0.0);
  for (int co = 0; co < g.out_channels; ++co) {
    for (int od = 0; od < g.out_depth; ++od) {
      for (int oh = 0; oh < g.out_height; ++oh) {
        const double* src =
            dy + ((static_cast<std::size_t>(co) * g.out_depth + od) * g.out_height + oh) * g.out_width;
        double* dst = wide.data() + (static_cast<std::size_t>(co) * g.out_depth + od) * plane +
                      static_cast<std::size_t>(oh) * p.wq;
        std::copy(src, src + g.out_width, dst);
      }
    }
  }
  return wide;
}

void conv_backward(const ConvGeometry& g, Node& self, std::size_t w_stride) {
  Node& nx = *self.inputs[0];
  Node& nw = *self.inputs[1];
  const Phases p = make_phases(g);
  const std::size_t span = wide_span(g, p);
  const std::size_t plane = wide_plane(g, p);
  const std::size_t wide_volume = plane * g.out_depth;
  const std::vector<double> dy = widen_grad(g, p, self.grad.data());

  if (nx.requires_grad) {
    double* dx = nx.ensure_grad().data();
    const double* w = nw.value.data();
    const PhaseOffsets offsets = phase_offsets(g, p);
    parallel_for(static_cast<std::size_t>(g.in_channels), [&](std::size_t begin, std::size_t end) {
      std::vector<double> dxp(p.channel());
      for (std::size_t ci = begin; ci < end; ++ci) {
        std::fill(dxp.begin(), dxp.end(), 0.0);
        for (int co = 0; co < g.out_channels; ++co) {
          const double* dyc = dy.data() + co * wide_volume;
          const double* wc = w + co * w_stride + ci * g.kernel_volume();
          for (int a = 0; a < g.kd; ++a) {
            for (int b = 0; b < g.kh; ++b) {
              for (int c = 0; c < g.kw; ++c) {
                const double wv = wc[(a * g.kh + b) * g.kw + c];
                for (int od = 0; od < g.out_depth; ++od) {
                  axpy(dxp.data() + tap_offset(g, p, od, a, b, c), dyc + od * plane, wv, span);
                }
              }
            }
          }
        }
        double* dst = dx + ci * g.in_volume();
        for (int d = 0; d < g.depth; ++d) {
          const double* base = dxp.data() + (d + g.pd) * p.plane();
          for (int h = 0; h < g.height; ++h) {
            const double* row = base + offsets.row[h];
            for (int v = 0; v < g.width; ++v) *dst++ += row[offsets.column[v]];
          }
        }
      }
    });
  }

  if (nw.requires_grad) {
    double* dw = nw.ensure_grad().data();
    const std::vector<double> xp = to_phases(g, p, nx.value.data());
    parallel_for(static_cast<std::size_t>(g.out_channels), [&](std::size_t begin, std::size_t end) {
      for (std::size_t co = begin; co < end; ++co) {
        const double* dyc = dy.data() + co * wide_volume;
        for (int ci = 0; ci < g.in_channels; ++ci) {
          const double* xc = xp.data() + ci * p.channel();
          double* dwc = dw + co * w_stride + static_cast<std::size_t>(ci) * g.kernel_volume();
          for (int a = 0; a < g.kd; ++a) {
            for (int b = 0; b < g.kh; ++b) {
              for (int c = 0; c < g.kw; ++c) {
                double acc = 0.0;
                for (int od = 0; od < g.out_depth; ++od) {
                  acc += dot(dyc + od * plane, xc + tap_offset(g, p, od, a, b, c), span);
                }
                dwc[(a * g.kh + b) * g.kw + c] += acc;
              }
            }
          }
        }
      }
    });
  }

  if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
    auto& db = self.inputs[2]->ensure_grad();
    const double* grad = self.grad.data();
    for (int co = 0; co < g.out_channels; ++co) {
      const double* dyc = grad + static_cast<std::size_t>(co) * g.out_volume();
      double acc = 0.0;
      for (std::size_t i = 0; i < g.out_volume(); ++i) acc += dyc[i];
      db[co] += acc;
    }
  }
}

}  // namespace

Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::array<int, 3> stride, std::array<int, 3> padding) {
  const ConvGeometry g = make_geometry(x, weight, stride, padding);
  const bool has_bias = bias.defined();
  if (has_bias && (bias.ndim() != 1 || bias.dim(0) != g.out_channels)) {
    throw std::invalid_argument("conv3d bias must have shape [" +
                                std::to_string(g.out_channels) + "]");
  }
  const std::size_t w_stride = static_cast<std::size_t>(g.in_channels) * g.kernel_volume();
  std::vector<double> out = conv_forward(g, x.data().data(), weight.data().data(),
                                         has_bias ? bias.data().data() : nullptr, w_stride);

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  Shape shape{g.out_channels, g.out_depth, g.out_height, g.out_width};
  return make_result("conv3d", std::move(shape), std::move(out), std::move(inputs),
                     [g, w_stride](Node& self) { conv_backward(g, self, w_stride); });
}

}  // namespace sci::ad
