#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sci/ad/optim.hpp"
#include "sci/ad/tensor.hpp"

namespace sci::ad {

using NamedTensor = std::pair<std::string, Tensor>;

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::optional<AdamState> adam;
  /// Free-form JSON object text (configs, step counters).
  std::string metadata = "{}";

  const Tensor* find(const std::string& name) const;
};

// Tensors are stored as raw IEEE-754 double bit patterns in an int64 SCIT
// container, so a reload is bit-exact. The manifest "<path>.json" carries a
// name -> (offset, shape) index, the Adam moments' offsets and the metadata.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sci::ad
