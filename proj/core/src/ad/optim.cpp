#include "sci/ad/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sci::ad {

double LrSchedule::at(std::int64_t step) const {
  if (total_steps <= 1) return initial;
  const double progress =
      std::clamp(static_cast<double>(step) / static_cast<double>(total_steps - 1), 0.0, 1.0);
  return final + 0.5 * (initial - final) * (1.0 + std::cos(std::numbers::pi * progress));
}

void adam_step(std::span<Tensor> params, AdamState& state, double lr,
               std::span<const bool> clamp_unit) {
  if (!clamp_unit.empty() && clamp_unit.size() != params.size()) {
    throw std::invalid_argument("clamp flags must match parameter count");
  }
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.numel(), 0.0);
      state.second.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first.size() != params.size()) {
    throw std::invalid_argument("Adam state was built for a different parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    auto& m = state.first[k];
    auto& v = state.second[k];
    if (m.size() != p.numel()) throw std::invalid_argument("Adam moment shape mismatch");
    const auto g = p.grad();
    auto value = p.mutable_data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    if (!clamp_unit.empty() && clamp_unit[k]) {
      for (auto& x : value) x = std::clamp(x, 0.0, 1.0);
    }
  }
}

}  // namespace sci::ad
