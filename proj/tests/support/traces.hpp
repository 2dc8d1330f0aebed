#pragma once

// Hand-worked structural-mask traces: (M' column, lambda) -> integer units.

#include <cstdint>
#include <vector>

namespace traces {

struct Trace {
  std::vector<double> mprime;
  int lambda;
  std::vector<std::int32_t> units;
};

inline std::vector<Trace> hand() {
  return {
      Trace{{0.0, 0.0}, 2, {2, 2}},
      Trace{{1, 1, 1, 1}, 2, {1, 1, 1, 1}},
      Trace{{0.3, 0.9}, 3, {2, 6}},
      Trace{{0.1, 0.2, 0.3}, 2, {0, 2, 2}},
      Trace{{0.2, 0.9, 0.4}, 1, {0, 1, 0}},
      Trace{{0.5, 0.5}, 1, {1, 0}},
      Trace{{0.5, 0.5, 0.5, 0.5}, 3, {2, 2, 2, 2}},
      Trace{{0.25, 0.75}, 2, {1, 3}},
      Trace{{1, 0, 0}, 2, {3, 1, 0}},
      Trace{{0.6, 0.7}, 4, {8, 8}},
      Trace{{0.9, 0.1, 0.1, 0.1}, 2, {3, 1, 0, 0}},
      Trace{{0.5, 0.5, 0.5}, 2, {1, 1, 2}},
      Trace{{1, 1}, 8, {128, 128}},
      Trace{{0, 0, 0, 0, 0}, 2, {1, 1, 1, 0, 1}},
      Trace{{0.2, 0.4, 0.6}, 3, {2, 2, 4}},
      Trace{{0.124, 0.126}, 2, {1, 3}},
  };
}

}  // namespace traces
