#include "sci/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace sci::io {

namespace {

using Kind = ContainerError::Kind;

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xFFu));
  }
}

template <typename T>
T get_le(const std::byte* in) {
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<U>(std::to_integer<unsigned>(in[i])) << (8 * i));
  }
  return static_cast<T>(bits);
}

bool valid_dtype(std::uint8_t code) { return code <= 3; }

template <typename T, typename Bits>
std::vector<std::byte> pack_bits(std::span<const T> values) {
  std::vector<std::byte> out;
  out.reserve(values.size() * sizeof(T));
  for (const T& v : values) put_le<Bits>(out, std::bit_cast<Bits>(v));
  return out;
}

template <typename T, typename Bits>
std::vector<T> unpack_bits(std::span<const std::byte> bytes) {
  if (bytes.size() % sizeof(T) != 0) {
    throw ContainerError(Kind::length_mismatch, "payload is not a whole number of elements");
  }
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<T>(get_le<Bits>(bytes.data() + i * sizeof(T)));
  }
  return out;
}

void expect_dims(const ContainerHeader& header, std::size_t ndim, const std::string& what) {
  if (header.dims.size() != ndim) {
    throw ContainerError(Kind::bad_header, what + " container must have " +
                                               std::to_string(ndim) + " dims");
  }
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::float32: return 4;
    case DType::uint8: return 1;
    case DType::uint16: return 2;
    case DType::int64: return 8;
  }
  throw ContainerError(Kind::unsupported_dtype, "unknown dtype");
}

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::float32: return "float32";
    case DType::uint8: return "uint8";
    case DType::uint16: return "uint16";
    case DType::int64: return "int64";
  }
  return "unknown";
}

std::size_t ContainerHeader::element_count() const {
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

std::vector<std::byte> encode_header(const ContainerHeader& header) {
  if (header.dims.size() > kMaxDims) {
    throw ContainerError(Kind::bad_header, "too many dimensions");
  }
  std::vector<std::byte> out;
  out.reserve(header.header_bytes());
  for (char c : header.magic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, header.version);
  out.push_back(static_cast<std::byte>(header.dtype));
  out.push_back(static_cast<std::byte>(header.dims.size()));
  for (auto d : header.dims) put_le<std::uint32_t>(out, d);
  return out;
}

void save_container(const std::filesystem::path& path, const ContainerHeader& header,
                    std::span<const std::byte> payload) {
  if (header.magic != kMagic) throw ContainerError(Kind::bad_magic, "header magic is not SCIT");
  if (payload.size() != header.payload_bytes()) {
    throw ContainerError(Kind::length_mismatch,
                         "payload has " + std::to_string(payload.size()) +
                             " bytes but header implies " +
                             std::to_string(header.payload_bytes()));
  }
  const auto head = encode_header(header);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContainerError(Kind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw ContainerError(Kind::io, "write failed for " + path.string());
}

std::pair<ContainerHeader, std::vector<std::byte>> load_container(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError(Kind::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const std::byte*>(raw.data());

  if (raw.size() < 8) throw ContainerError(Kind::truncated, "file shorter than fixed header");
  ContainerHeader header;
  std::memcpy(header.magic.data(), raw.data(), 4);
  if (header.magic != kMagic) throw ContainerError(Kind::bad_magic, "bad magic in " + path.string());
  header.version = get_le<std::uint16_t>(bytes + 4);
  if (header.version != kVersion) {
    throw ContainerError(Kind::unsupported_version,
                         "unsupported container version " + std::to_string(header.version));
  }
  const auto dtype_code = std::to_integer<std::uint8_t>(bytes[6]);
  if (!valid_dtype(dtype_code)) {
    throw ContainerError(Kind::unsupported_dtype,
                         "unsupported dtype code " + std::to_string(dtype_code));
  }
  header.dtype = static_cast<DType>(dtype_code);
  const auto ndim = std::to_integer<std::size_t>(bytes[7]);
  if (ndim > kMaxDims) throw ContainerError(Kind::bad_header, "too many dimensions");
  if (raw.size() < 8 + 4 * ndim) throw ContainerError(Kind::truncated, "truncated dims");
  for (std::size_t i = 0; i < ndim; ++i) {
    header.dims.push_back(get_le<std::uint32_t>(bytes + 8 + 4 * i));
  }
  const std::size_t offset = header.header_bytes();
  const std::size_t available = raw.size() - offset;
  if (available < header.payload_bytes()) {
    throw ContainerError(Kind::truncated, "payload truncated: " + std::to_string(available) +
                                              " of " + std::to_string(header.payload_bytes()) +
                                              " bytes");
  }
  if (available > header.payload_bytes()) {
    throw ContainerError(Kind::length_mismatch, "trailing bytes after payload");
  }
  std::vector<std::byte> payload(bytes + offset, bytes + raw.size());
  return {std::move(header), std::move(payload)};
}

std::filesystem::path manifest_path(const std::filesystem::path& container) {
  auto p = container;
  p += ".json";
  return p;
}

void write_manifest(const std::filesystem::path& container, const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["role"] = manifest.role;
  j["B"] = manifest.frames;
  j["H"] = manifest.height;
  j["W"] = manifest.width;
  if (manifest.lambda) j["lambda"] = *manifest.lambda;
  if (manifest.kappa) j["kappa"] = *manifest.kappa;
  if (manifest.structural) j["structural"] = *manifest.structural;
  if (manifest.aperture) j["aperture"] = *manifest.aperture;
  std::ofstream out(manifest_path(container), std::ios::trunc);
  if (!out) throw ContainerError(Kind::io, "cannot write manifest for " + container.string());
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& container) {
  std::ifstream in(manifest_path(container));
  if (!in) throw ContainerError(Kind::io, "missing manifest " + manifest_path(container).string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(Kind::bad_header, std::string("malformed manifest: ") + e.what());
  }
  Manifest m;
  m.role = j.value("role", "");
  m.frames = j.value("B", 0);
  m.height = j.value("H", 0);
  m.width = j.value("W", 0);
  if (j.contains("lambda")) m.lambda = j["lambda"].get<int>();
  if (j.contains("kappa")) m.kappa = j["kappa"].get<int>();
  if (j.contains("structural")) m.structural = j["structural"].get<bool>();
  if (j.contains("aperture")) m.aperture = j["aperture"].get<double>();
  return m;
}

std::vector<std::byte> pack_f32(std::span<const float> values) {
  return pack_bits<float, std::uint32_t>(values);
}
std::vector<float> unpack_f32(std::span<const std::byte> bytes) {
  return unpack_bits<float, std::uint32_t>(bytes);
}
std::vector<std::byte> pack_u8(std::span<const std::uint8_t> values) {
  return pack_bits<std::uint8_t, std::uint8_t>(values);
}
std::vector<std::byte> pack_u16(std::span<const std::uint16_t> values) {
  return pack_bits<std::uint16_t, std::uint16_t>(values);
}
std::vector<std::uint16_t> unpack_u16(std::span<const std::byte> bytes) {
  return unpack_bits<std::uint16_t, std::uint16_t>(bytes);
}
std::vector<std::byte> pack_i64(std::span<const std::int64_t> values) {
  return pack_bits<std::int64_t, std::int64_t>(values);
}
std::vector<std::int64_t> unpack_i64(std::span<const std::byte> bytes) {
  return unpack_bits<std::int64_t, std::int64_t>(bytes);
}

void save_video(const std::filesystem::path& path, const VideoCube& video) {
  ContainerHeader header;
  header.dtype = DType::float32;
  header.dims = {static_cast<std::uint32_t>(video.frames()),
                 static_cast<std::uint32_t>(video.height()),
                 static_cast<std::uint32_t>(video.width())};
  save_container(path, header, pack_f32(video.data()));
  write_manifest(path, {.role = "video",
                        .frames = video.frames(),
                        .height = video.height(),
                        .width = video.width()});
}

VideoCube load_video(const std::filesystem::path& path) {
  auto [header, payload] = load_container(path);
  if (header.dtype != DType::float32) {
    throw ContainerError(Kind::unsupported_dtype, "video containers must be float32");
  }
  expect_dims(header, 3, "video");
  return VideoCube(static_cast<int>(header.dims[0]), static_cast<int>(header.dims[1]),
                   static_cast<int>(header.dims[2]), unpack_f32(payload));
}

void save_measurement(const std::filesystem::path& path, const Measurement& y,
                      std::optional<double> aperture) {
  ContainerHeader header;
  header.dims = {static_cast<std::uint32_t>(y.height()), static_cast<std::uint32_t>(y.width())};
  std::vector<std::byte> payload;
  if (y.kappa() <= 8) {
    header.dtype = DType::uint8;
    std::vector<std::uint8_t> narrow(y.digital().begin(), y.digital().end());
    payload = pack_u8(narrow);
  } else {
    header.dtype = DType::uint16;
    payload = pack_u16(y.digital());
  }
  save_container(path, header, payload);
  write_manifest(path, {.role = "measurement",
                        .frames = 1,
                        .height = y.height(),
                        .width = y.width(),
                        .kappa = y.kappa(),
                        .aperture = aperture});
}

Measurement load_measurement(const std::filesystem::path& path) {
  auto [header, payload] = load_container(path);
  expect_dims(header, 2, "measurement");
  const Manifest manifest = read_manifest(path);
  if (manifest.role != "measurement") {
    throw ContainerError(Kind::bad_header, path.string() + " is not a measurement");
  }
  const int kappa = manifest.kappa.value_or(8);
  std::vector<std::uint16_t> codes;
  if (header.dtype == DType::uint8) {
    codes.reserve(payload.size());
    for (auto b : payload) codes.push_back(std::to_integer<std::uint16_t>(b));
  } else if (header.dtype == DType::uint16) {
    codes = unpack_u16(payload);
  } else {
    throw ContainerError(Kind::unsupported_dtype, "measurement must be uint8 or uint16");
  }
  return Measurement(static_cast<int>(header.dims[0]), static_cast<int>(header.dims[1]), kappa,
                     std::move(codes));
}

}  // namespace sci::io
