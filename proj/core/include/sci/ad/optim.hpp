#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sci/ad/tensor.hpp"

namespace sci::ad {

/// Cosine decay from `initial` to `final` over `total_steps` updates.
struct LrSchedule {
  double initial = 1e-4;
  double final = 1e-5;
  std::int64_t total_steps = 1;

  double at(std::int64_t step) const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first;   // per parameter
  std::vector<std::vector<double>> second;  // per parameter
};

/// One bias-corrected Adam update of every parameter using its accumulated
/// grad. Parameters flagged in `clamp_unit` are projected onto [0,1]
/// afterwards (learnable mask transmittance).
void adam_step(std::span<Tensor> params, AdamState& state, double lr,
               std::span<const bool> clamp_unit = {});

}  // namespace sci::ad
