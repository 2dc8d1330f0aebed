#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sci/ad/tensor.hpp"

namespace sci::ad {

// Elementwise binary ops. `b` must either match `a` or equal a trailing
// suffix of a's shape (it is then repeated over the leading dimensions).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
/// max(a, floor); gradient is zero where the floor is active.
Tensor clamp_min(const Tensor& a, double floor);

inline constexpr double kLeakySlope = 0.02;
Tensor leaky_relu(const Tensor& a, double slope = kLeakySlope);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sums over one axis, removing it.
Tensor sum_axis(const Tensor& a, int axis);
/// mean((a - b)^2) as a scalar.
Tensor mse_loss(const Tensor& a, const Tensor& b);

/// Batched matmul: a [..., m, k] x b [..., k, n]. A 2-D `b` is shared by
/// every batch entry of `a`.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& a, int axis);

Tensor reshape(const Tensor& a, Shape shape);
/// General axis permutation: out.shape[i] = a.shape[perm[i]].
Tensor permute(const Tensor& a, std::vector<int> perm);
/// Swaps two axes.
Tensor transpose(const Tensor& a, int axis0, int axis1);

Tensor concat(const std::vector<Tensor>& parts, int axis);
std::vector<Tensor> split(const Tensor& a, const std::vector<int>& sizes, int axis);

/// Zero-padded cross-correlation. x [Cin, D, H, W], weight
/// [Cout, Cin, kd, kh, kw], bias [Cout] (may be undefined).
Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::array<int, 3> stride = {1, 1, 1}, std::array<int, 3> padding = {0, 0, 0});

/// x [Cin, H, W], weight [Cout, Cin, kh, kw], bias [Cout] (may be undefined).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::array<int, 2> stride = {1, 1}, std::array<int, 2> padding = {0, 0});

/// Spatial sub-pixel shuffle on the last two axes:
/// [C*r*r, ..., H, W] -> [C, ..., H*r, W*r].
Tensor pixel_shuffle(const Tensor& x, int factor);

/// Non-differentiable forward map with identity backward. `forward` must
/// preserve the element count. Under StraightThroughBypass the map is skipped.
using ElementMap = std::function<std::vector<double>(std::span<const double>)>;
Tensor straight_through(const Tensor& x, const ElementMap& forward, std::string name);

}  // namespace sci::ad
