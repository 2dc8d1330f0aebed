#include "sci/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sci::ad {

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double h,
                           double tol) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  StraightThroughBypass bypass;

  // Fresh leaves so the caller's tensors keep their grads untouched.
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const auto& in : inputs) {
    leaves.push_back(Tensor::from(in.shape(), std::vector<double>(in.data().begin(), in.data().end()),
                                  true));
  }

  const Tensor out = f(leaves);
  if (out.numel() != 1) throw std::invalid_argument("grad_check needs a scalar-valued function");
  out.backward();

  GradCheckReport report;
  report.tolerance = tol;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const auto analytic = leaves[k].grad();
    auto values = leaves[k].mutable_data();
    double diff_sq = 0.0;
    double analytic_sq = 0.0;
    double numeric_sq = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = f(leaves).item();
      values[i] = saved - h;
      const double minus = f(leaves).item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double d = analytic[i] - numeric;
      diff_sq += d * d;
      analytic_sq += analytic[i] * analytic[i];
      numeric_sq += numeric * numeric;
      report.max_abs_error = std::max(report.max_abs_error, std::abs(d));
      ++report.checked;
    }
    const double scale = std::sqrt(std::max(analytic_sq, numeric_sq));
    const double rel = scale > 0.0 ? std::sqrt(diff_sq) / scale : std::sqrt(diff_sq);
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_input = "input " + std::to_string(k) + " " + to_string(leaves[k].shape());
    }
  }
  return report;
}

}  // namespace sci::ad
