#include "sci/ad/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"
#include "sci/container.hpp"

namespace sci::ad {

namespace {

using nlohmann::json;
using io::ContainerError;

void append(std::vector<std::int64_t>& payload, std::span<const double> values) {
  for (double v : values) payload.push_back(std::bit_cast<std::int64_t>(v));
}

std::vector<double> extract(const std::vector<std::int64_t>& payload, std::size_t offset,
                            std::size_t count) {
  if (offset + count > payload.size()) {
    throw ContainerError(ContainerError::Kind::truncated, "checkpoint index points past payload");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<double>(payload[offset + i]);
  return out;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [key, tensor] : tensors) {
    if (key == name) return &tensor;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::vector<std::int64_t> payload;
  json index = json::array();
  for (const auto& [name, tensor] : checkpoint.tensors) {
    index.push_back({{"name", name}, {"offset", payload.size()}, {"shape", tensor.shape()}});
    append(payload, tensor.data());
  }

  json manifest;
  manifest["role"] = "checkpoint";
  manifest["index"] = std::move(index);
  if (checkpoint.adam) {
    const AdamState& adam = *checkpoint.adam;
    json moments = json::array();
    for (std::size_t k = 0; k < adam.first.size(); ++k) {
      json entry{{"size", adam.first[k].size()}, {"first", payload.size()}};
      append(payload, adam.first[k]);
      entry["second"] = payload.size();
      append(payload, adam.second[k]);
      moments.push_back(std::move(entry));
    }
    manifest["adam"] = {{"step", adam.step},
                        {"beta1", adam.beta1},
                        {"beta2", adam.beta2},
                        {"eps", adam.eps},
                        {"moments", std::move(moments)}};
  }
  manifest["metadata"] = json::parse(checkpoint.metadata);

  io::ContainerHeader header;
  header.dtype = io::DType::int64;
  header.dims = {static_cast<std::uint32_t>(payload.size())};
  io::save_container(path, header, io::pack_i64(payload));
  std::ofstream out(io::manifest_path(path), std::ios::trunc);
  if (!out) throw ContainerError(ContainerError::Kind::io, "cannot write checkpoint manifest");
  out << manifest.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto [header, bytes] = io::load_container(path);
  if (header.dtype != io::DType::int64 || header.dims.size() != 1) {
    throw ContainerError(ContainerError::Kind::bad_header, "not a checkpoint container");
  }
  const auto payload = io::unpack_i64(bytes);
  std::ifstream in(io::manifest_path(path));
  if (!in) throw ContainerError(ContainerError::Kind::io, "missing checkpoint manifest");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ContainerError(ContainerError::Kind::bad_header, std::string("bad manifest: ") + e.what());
  }
  if (manifest.value("role", "") != "checkpoint") {
    throw ContainerError(ContainerError::Kind::bad_header, path.string() + " is not a checkpoint");
  }

  Checkpoint checkpoint;
  for (const auto& entry : manifest.at("index")) {
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    checkpoint.tensors.emplace_back(entry.at("name").get<std::string>(),
                                    Tensor::from(shape, extract(payload, offset, numel(shape))));
  }
  if (manifest.contains("adam")) {
    const auto& a = manifest["adam"];
    AdamState adam;
    adam.step = a.at("step").get<std::int64_t>();
    adam.beta1 = a.at("beta1").get<double>();
    adam.beta2 = a.at("beta2").get<double>();
    adam.eps = a.at("eps").get<double>();
    for (const auto& m : a.at("moments")) {
      const auto size = m.at("size").get<std::size_t>();
      adam.first.push_back(extract(payload, m.at("first").get<std::size_t>(), size));
      adam.second.push_back(extract(payload, m.at("second").get<std::size_t>(), size));
    }
    checkpoint.adam = std::move(adam);
  }
  checkpoint.metadata = manifest.value("metadata", json::object()).dump();
  return checkpoint;
}

}  // namespace sci::ad
