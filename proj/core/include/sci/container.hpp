#pragma once

// "SCIT" binary container shared by every tool.
//
//   offset  size      field
//   0       4         magic "SCIT"
//   4       2         version (u16, little-endian)
//   6       1         dtype code: 0 float32, 1 uint8, 2 uint16, 3 int64
//   7       1         ndim (u8)
//   8       4*ndim    dims (u32 each, little-endian)
//   ...     payload   product(dims) * sizeof(dtype) bytes, little-endian
//
// A sidecar JSON manifest "<path>.json" names the role of the payload.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/video.hpp"

namespace sci::io {

inline constexpr std::array<char, 4> kMagic{'S', 'C', 'I', 'T'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kMaxDims = 8;

enum class DType : std::uint8_t { float32 = 0, uint8 = 1, uint16 = 2, int64 = 3 };

std::size_t dtype_size(DType dtype);
const char* dtype_name(DType dtype);

struct ContainerHeader {
  std::array<char, 4> magic = kMagic;
  std::uint16_t version = kVersion;
  DType dtype = DType::float32;
  std::vector<std::uint32_t> dims;

  std::size_t element_count() const;
  std::size_t payload_bytes() const { return element_count() * dtype_size(dtype); }
  std::size_t header_bytes() const { return 8 + 4 * dims.size(); }

  bool operator==(const ContainerHeader&) const = default;
};

class ContainerError : public std::runtime_error {
 public:
  enum class Kind {
    io,
    bad_magic,
    unsupported_version,
    unsupported_dtype,
    bad_header,
    truncated,
    length_mismatch,
  };

  ContainerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::byte> encode_header(const ContainerHeader& header);

void save_container(const std::filesystem::path& path, const ContainerHeader& header,
                    std::span<const std::byte> payload);
std::pair<ContainerHeader, std::vector<std::byte>> load_container(
    const std::filesystem::path& path);

/// Role manifest stored next to a container as "<path>.json".
struct Manifest {
  std::string role;  // "video" | "mask" | "measurement"
  int frames = 0;
  int height = 0;
  int width = 0;
  std::optional<int> lambda;
  std::optional<int> kappa;
  std::optional<bool> structural;
  std::optional<double> aperture;

  bool operator==(const Manifest&) const = default;
};

std::filesystem::path manifest_path(const std::filesystem::path& container);
void write_manifest(const std::filesystem::path& container, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& container);

// Typed payload helpers. Element bytes are little-endian regardless of host.
std::vector<std::byte> pack_f32(std::span<const float> values);
std::vector<float> unpack_f32(std::span<const std::byte> bytes);
std::vector<std::byte> pack_u8(std::span<const std::uint8_t> values);
std::vector<std::byte> pack_u16(std::span<const std::uint16_t> values);
std::vector<std::uint16_t> unpack_u16(std::span<const std::byte> bytes);
std::vector<std::byte> pack_i64(std::span<const std::int64_t> values);
std::vector<std::int64_t> unpack_i64(std::span<const std::byte> bytes);

void save_video(const std::filesystem::path& path, const VideoCube& video);
VideoCube load_video(const std::filesystem::path& path);

/// kappa <= 8 stores uint8 codes, wider sensors store uint16.
void save_measurement(const std::filesystem::path& path, const Measurement& y,
                      std::optional<double> aperture = std::nullopt);
Measurement load_measurement(const std::filesystem::path& path);

}  // namespace sci::io
