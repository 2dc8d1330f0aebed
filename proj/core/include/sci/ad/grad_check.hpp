#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sci/ad/tensor.hpp"

namespace sci::ad {

struct GradCheckReport {
  /// Largest per-input relative error ||analytic - numeric|| / max(||analytic||, ||numeric||).
  double max_relative_error = 0.0;
  /// Largest elementwise |analytic - numeric|.
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  double tolerance = 0.0;
  std::string worst_input;

  bool passed() const noexcept { return max_relative_error <= tolerance; }
};

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares backward() against central differences with step h for every
/// element of every input. Straight-through nodes are bypassed (identity) for
/// both evaluations; their identity contract is tested separately.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-3,
                           double tol = 1e-4);

}  // namespace sci::ad
