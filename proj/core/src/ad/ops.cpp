#include "sci/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace sci::ad {

namespace {

int normalize_axis(int axis, int ndim) {
  if (axis < 0) axis += ndim;
  if (axis < 0 || axis >= ndim) {
    throw std::invalid_argument("axis " + std::to_string(axis) + " invalid for rank " +
                                std::to_string(ndim));
  }
  return axis;
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= static_cast<std::size_t>(shape[i]);
  s.length = static_cast<std::size_t>(shape[axis]);
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i) {
    s.inner *= static_cast<std::size_t>(shape[i]);
  }
  return s;
}

void check_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  bool ok = sb.size() <= sa.size();
  for (std::size_t i = 0; ok && i < sb.size(); ++i) {
    ok = sb[sb.size() - 1 - i] == sa[sa.size() - 1 - i];
  }
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape " + to_string(sb) +
                                " does not broadcast onto " + to_string(sa));
  }
}

// Elementwise binary op with trailing-suffix broadcasting of b.
template <typename Fwd, typename DA, typename DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  check_broadcast(a, b, name);
  const std::size_t n = a.numel();
  const std::size_t nb = b.numel();
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i % nb]);
  return make_result(name, a.shape(), std::move(out), {a, b}, [n, nb, da, db](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb_node = *self.inputs[1];
    const auto& g = self.grad;
    if (na.requires_grad) {
      auto& ga = na.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        ga[i] += g[i] * da(na.value[i], nb_node.value[i % nb]);
      }
    }
    if (nb_node.requires_grad) {
      auto& gb = nb_node.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        gb[i % nb] += g[i] * db(na.value[i], nb_node.value[i % nb]);
      }
    }
  });
}

// Output element i reads input element index[i]; backward scatters back.
Tensor gather(const char* name, const Tensor& a, Shape shape,
              std::shared_ptr<const std::vector<std::size_t>> index) {
  const auto av = a.data();
  std::vector<double> out(index->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[(*index)[i]];
  return make_result(name, std::move(shape), std::move(out), {a}, [index](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < index->size(); ++i) g[(*index)[i]] += self.grad[i];
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double factor) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return make_result("scale", a.shape(), std::move(out), {a}, [factor](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double offset) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + offset;
  return make_result("add_scalar", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor clamp_min(const Tensor& a, double floor) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::max(av[i], floor);
  return make_result("clamp_min", a.shape(), std::move(out), {a}, [floor](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in.value[i] > floor) g[i] += self.grad[i];
    }
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : slope * av[i];
  return make_result("leaky_relu", a.shape(), std::move(out), {a}, [slope](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * (in.value[i] > 0.0 ? 1.0 : slope);
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result("sum", {}, {total}, {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_axis(const Tensor& a, int axis) {
  axis = normalize_axis(axis, a.ndim());
  const AxisSplit s = split_at(a.shape(), axis);
  Shape shape = a.shape();
  shape.erase(shape.begin() + axis);
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto av = a.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.length; ++k) {
      const double* src = av.data() + (o * s.length + k) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  return make_result("sum_axis", std::move(shape), std::move(out), {a}, [s](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < s.length; ++k) {
        double* dst = g.data() + (o * s.length + k) * s.inner;
        const double* src = self.grad.data() + o * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mse_loss shape mismatch: " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
  const auto av = a.data();
  const auto bv = b.data();
  const std::size_t n = av.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    total += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_result("mse_loss", {}, {total * inv_n}, {a, b}, [n, inv_n](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const double g = self.grad[0] * 2.0 * inv_n;
    if (na.requires_grad) {
      auto& ga = na.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (na.value[i] - nb.value[i]);
    }
    if (nb.requires_grad) {
      auto& gb = nb.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) gb[i] -= g * (na.value[i] - nb.value[i]);
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2) throw std::invalid_argument("matmul needs rank >= 2");
  const int m = a.dim(-2);
  const int k = a.dim(-1);
  const int kb = b.dim(-2);
  const int n = b.dim(-1);
  if (k != kb) {
    throw std::invalid_argument("matmul inner dims differ: " + to_string(a.shape()) + " x " +
                                to_string(b.shape()));
  }
  const std::size_t batch = a.numel() / (static_cast<std::size_t>(m) * k);
  const bool shared_b = b.ndim() == 2;
  if (!shared_b) {
    const Shape ba(a.shape().begin(), a.shape().end() - 2);
    const Shape bb(b.shape().begin(), b.shape().end() - 2);
    if (ba != bb) {
      throw std::invalid_argument("matmul batch dims differ: " + to_string(a.shape()) + " x " +
                                  to_string(b.shape()));
    }
  }
  Shape shape(a.shape().begin(), a.shape().end() - 2);
  shape.push_back(m);
  shape.push_back(n);
  const std::size_t a_stride = static_cast<std::size_t>(m) * k;
  const std::size_t b_stride = shared_b ? 0 : static_cast<std::size_t>(k) * n;
  const std::size_t c_stride = static_cast<std::size_t>(m) * n;

  std::vector<double> out(batch * c_stride, 0.0);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t bt = 0; bt < batch; ++bt) {
    const double* A = av.data() + bt * a_stride;
    const double* B = bv.data() + bt * b_stride;
    double* C = out.data() + bt * c_stride;
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        const double* brow = B + static_cast<std::size_t>(p) * n;
        double* crow = C + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
  return make_result(
      "matmul", std::move(shape), std::move(out), {a, b},
      [=](Node& self) {
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        for (std::size_t bt = 0; bt < batch; ++bt) {
          const double* A = na.value.data() + bt * a_stride;
          const double* B = nb.value.data() + bt * b_stride;
          const double* G = self.grad.data() + bt * c_stride;
          if (na.requires_grad) {
            double* GA = na.ensure_grad().data() + bt * a_stride;
            for (int i = 0; i < m; ++i) {
              for (int p = 0; p < k; ++p) {
                double acc = 0.0;
                const double* brow = B + static_cast<std::size_t>(p) * n;
                const double* grow = G + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                GA[i * k + p] += acc;
              }
            }
          }
          if (nb.requires_grad) {
            double* GB = nb.ensure_grad().data() + bt * b_stride;
            for (int i = 0; i < m; ++i) {
              const double* grow = G + static_cast<std::size_t>(i) * n;
              for (int p = 0; p < k; ++p) {
                const double aip = A[i * k + p];
                double* gbrow = GB + static_cast<std::size_t>(p) * n;
                for (int j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
              }
            }
          }
        }
      });
}

Tensor softmax(const Tensor& a, int axis) {
  axis = normalize_axis(axis, a.ndim());
  const AxisSplit s = split_at(a.shape(), axis);
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.length * s.inner + i;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.length; ++k) peak = std::max(peak, av[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) {
        const double e = std::exp(av[base + k * s.inner] - peak);
        out[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.length; ++k) out[base + k * s.inner] /= total;
    }
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [s](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    const auto& y = self.value;
    const auto& dy = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.length * s.inner + i;
        double dot = 0.0;
        for (std::size_t k = 0; k < s.length; ++k) {
          dot += dy[base + k * s.inner] * y[base + k * s.inner];
        }
        for (std::size_t k = 0; k < s.length; ++k) {
          const std::size_t idx = base + k * s.inner;
          g[idx] += y[idx] * (dy[idx] - dot);
        }
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw std::invalid_argument("cannot reshape " + to_string(a.shape()) + " to " +
                                to_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& a, std::vector<int> perm) {
  const int rank = a.ndim();
  if (static_cast<int>(perm.size()) != rank) throw std::invalid_argument("permute rank mismatch");
  std::vector<int> seen(rank, 0);
  for (int& p : perm) {
    p = normalize_axis(p, rank);
    if (seen[p]++) throw std::invalid_argument("permute axes must be distinct");
  }
  const Shape& in_shape = a.shape();
  std::vector<std::size_t> in_strides(rank, 1);
  for (int i = rank - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
  Shape shape(rank);
  for (int i = 0; i < rank; ++i) shape[i] = in_shape[perm[i]];

  auto index = std::make_shared<std::vector<std::size_t>>(a.numel());
  std::vector<int> counter(rank, 0);
  for (std::size_t i = 0; i < index->size(); ++i) {
    std::size_t offset = 0;
    for (int d = 0; d < rank; ++d) offset += counter[d] * in_strides[perm[d]];
    (*index)[i] = offset;
    for (int d = rank - 1; d >= 0; --d) {
      if (++counter[d] < shape[d]) break;
      counter[d] = 0;
    }
  }
  return gather("permute", a, std::move(shape), std::move(index));
}

Tensor transpose(const Tensor& a, int axis0, int axis1) {
  std::vector<int> perm(a.ndim());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[normalize_axis(axis0, a.ndim())], perm[normalize_axis(axis1, a.ndim())]);
  return permute(a, std::move(perm));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  const int rank = parts.front().ndim();
  axis = normalize_axis(axis, rank);
  Shape shape = parts.front().shape();
  shape[axis] = 0;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (static_cast<int>(probe.size()) != rank) throw std::invalid_argument("concat rank mismatch");
    shape[axis] += probe[axis];
    probe[axis] = parts.front().shape()[axis];
    if (probe != parts.front().shape()) {
      throw std::invalid_argument("concat shapes differ off-axis: " + to_string(p.shape()));
    }
  }
  const AxisSplit total = split_at(shape, axis);
  std::vector<double> out(numel(shape));
  std::vector<std::size_t> lengths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = static_cast<std::size_t>(p.shape()[axis]);
    lengths.push_back(len);
    const auto pv = p.data();
    for (std::size_t o = 0; o < total.outer; ++o) {
      std::copy_n(pv.data() + o * len * total.inner, len * total.inner,
                  out.data() + (o * total.length + offset) * total.inner);
    }
    offset += len;
  }
  return make_result("concat", std::move(shape), std::move(out), parts,
                     [total, lengths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < lengths.size(); ++k) {
                         Node& in = *self.inputs[k];
                         const std::size_t len = lengths[k];
                         if (in.requires_grad) {
                           auto& g = in.ensure_grad();
                           for (std::size_t o = 0; o < total.outer; ++o) {
                             const double* src =
                                 self.grad.data() + (o * total.length + off) * total.inner;
                             double* dst = g.data() + o * len * total.inner;
                             for (std::size_t i = 0; i < len * total.inner; ++i) dst[i] += src[i];
                           }
                         }
                         off += len;
                       }
                     });
}

std::vector<Tensor> split(const Tensor& a, const std::vector<int>& sizes, int axis) {
  axis = normalize_axis(axis, a.ndim());
  const AxisSplit s = split_at(a.shape(), axis);
  const long long covered = std::accumulate(sizes.begin(), sizes.end(), 0LL);
  if (covered != static_cast<long long>(s.length)) {
    throw std::invalid_argument("split sizes do not cover axis of length " +
                                std::to_string(s.length));
  }
  std::vector<Tensor> parts;
  std::size_t offset = 0;
  for (int len_i : sizes) {
    if (len_i < 0) throw std::invalid_argument("negative split size");
    const auto len = static_cast<std::size_t>(len_i);
    Shape shape = a.shape();
    shape[axis] = len_i;
    auto index = std::make_shared<std::vector<std::size_t>>();
    index->reserve(s.outer * len * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < len * s.inner; ++k) {
        index->push_back((o * s.length + offset) * s.inner + k);
      }
    }
    parts.push_back(gather("split", a, std::move(shape), std::move(index)));
    offset += len;
  }
  return parts;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::array<int, 2> stride, std::array<int, 2> padding) {
  if (x.ndim() != 3 || weight.ndim() != 4) {
    throw std::invalid_argument("conv2d expects x [C,H,W] and weight [O,C,kh,kw]");
  }
  const Tensor x3 = reshape(x, {x.dim(0), 1, x.dim(1), x.dim(2)});
  const Tensor w3 = reshape(weight, {weight.dim(0), weight.dim(1), 1, weight.dim(2), weight.dim(3)});
  const Tensor y = conv3d(x3, w3, bias, {1, stride[0], stride[1]}, {0, padding[0], padding[1]});
  return reshape(y, {y.dim(0), y.dim(2), y.dim(3)});
}

Tensor pixel_shuffle(const Tensor& x, int factor) {
  if (x.ndim() < 3) throw std::invalid_argument("pixel_shuffle needs rank >= 3");
  if (factor < 1) throw std::invalid_argument("pixel_shuffle factor must be positive");
  const int r2 = factor * factor;
  const int channels = x.dim(0);
  if (channels % r2 != 0) {
    throw std::invalid_argument("pixel_shuffle: " + std::to_string(channels) +
                                " channels not divisible by " + std::to_string(r2));
  }
  const int h = x.dim(-2);
  const int w = x.dim(-1);
  std::size_t middle = 1;
  for (int i = 1; i < x.ndim() - 2; ++i) middle *= static_cast<std::size_t>(x.dim(i));
  Shape shape = x.shape();
  shape[0] = channels / r2;
  shape[shape.size() - 2] = h * factor;
  shape[shape.size() - 1] = w * factor;

  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_w = static_cast<std::size_t>(w) * factor;
  const std::size_t out_plane = plane * r2;
  auto index = std::make_shared<std::vector<std::size_t>>(x.numel());
  for (int c = 0; c < shape[0]; ++c) {
    for (std::size_t m = 0; m < middle; ++m) {
      for (int oh = 0; oh < h * factor; ++oh) {
        for (int ow = 0; ow < w * factor; ++ow) {
          const int src_c = c * r2 + (oh % factor) * factor + (ow % factor);
          const std::size_t src = (static_cast<std::size_t>(src_c) * middle + m) * plane +
                                  static_cast<std::size_t>(oh / factor) * w + ow / factor;
          const std::size_t dst = (static_cast<std::size_t>(c) * middle + m) * out_plane +
                                  static_cast<std::size_t>(oh) * out_w + ow;
          (*index)[dst] = src;
        }
      }
    }
  }
  return gather("pixel_shuffle", x, std::move(shape), std::move(index));
}

Tensor straight_through(const Tensor& x, const ElementMap& forward, std::string name) {
  std::vector<double> out;
  if (straight_through_bypassed()) {
    out.assign(x.data().begin(), x.data().end());
  } else {
    out = forward(x.data());
    if (out.size() != x.numel()) {
      throw std::invalid_argument("straight-through map changed the element count");
    }
  }
  Tensor result = make_result("ste:" + name, x.shape(), std::move(out), {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
  result.node()->straight_through = true;
  return result;
}

}  // namespace sci::ad
