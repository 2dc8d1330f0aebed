#include "sci/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "sci/container.hpp"
#include "sci/random.hpp"

namespace sci::mask {

namespace {

constexpr int kMaxLambda = 16;

void check_lambda(int lambda) {
  if (lambda < 1 || lambda > kMaxLambda) {
    throw std::invalid_argument("mask bit depth must be in [1, 16], got " +
                                std::to_string(lambda));
  }
}

void check_geometry(int frames, int height, int width) {
  if (frames <= 0 || height <= 0 || width <= 0) {
    throw ShapeError("mask dimensions must be positive");
  }
}

std::int64_t floor_div(std::int64_t n, std::int64_t d) {
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

// Grid projection of one temporal column, in units of 1/L.
void discretize_column(std::span<const double> column, int lambda, std::span<std::int64_t> out) {
  if (lambda == 1) {
    for (std::size_t t = 0; t < column.size(); ++t) {
      out[t] = static_cast<std::int64_t>(std::floor(column[t] + 0.5));
    }
    return;
  }
  const std::int64_t levels = std::int64_t{1} << lambda;
  bool all_zero = true;
  for (std::size_t t = 0; t < column.size(); ++t) {
    auto u = static_cast<std::int64_t>(std::floor(column[t] * static_cast<double>(levels) + 0.5));
    if (u == levels) u = levels - 1;
    out[t] = u;
    all_zero = all_zero && u == 0;
  }
  if (all_zero) std::fill(out.begin(), out.end(), 1);
}

// Excess redistribution on a discretized column. `units` holds the grid
// values on entry and the structural values on exit.
void redistribute_column(std::span<std::int64_t> units, std::int64_t levels) {
  std::int64_t omega = 0;
  for (auto u : units) omega += u;
  std::int64_t excess = omega - levels;
  for (auto& entry : units) {
    const std::int64_t current = entry;
    // round(excess * current / omega) with exact rational arithmetic.
    const std::int64_t delta =
        omega > 0 ? floor_div(2 * excess * current + omega, 2 * omega) : 0;
    entry = current - delta;
    omega -= current;
    excess -= delta;
  }
}

void repair_column(std::span<std::int64_t> units, std::int64_t levels) {
  const std::int64_t top = levels - 1;
  std::int64_t total = 0;
  for (auto& u : units) {
    u = std::clamp<std::int64_t>(u, 0, top);
    total += u;
  }
  std::int64_t residual = levels - total;
  while (residual > 0) {
    for (auto& u : units) {
      if (residual == 0) break;
      if (u < top) {
        ++u;
        --residual;
      }
    }
  }
  while (residual < 0) {
    for (auto& u : units) {
      if (residual == 0) break;
      if (u > 0) {
        --u;
        ++residual;
      }
    }
  }
}

void one_hot_column(std::span<const double> column, std::span<std::int64_t> out) {
  const auto best = std::max_element(column.begin(), column.end()) - column.begin();
  std::fill(out.begin(), out.end(), 0);
  out[static_cast<std::size_t>(best)] = 1;
}

template <typename ColumnFn>
MaskCube map_columns(const LearnableMask& mprime, int lambda, bool structural, ColumnFn&& fn) {
  const int frames = mprime.frames();
  const std::size_t pixels = mprime.pixels();
  std::vector<std::int32_t> units(static_cast<std::size_t>(frames) * pixels);
  std::vector<double> column(frames);
  std::vector<std::int64_t> out(frames);
  const auto values = mprime.values();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int t = 0; t < frames; ++t) column[t] = values[t * pixels + p];
    fn(std::span<const double>(column), std::span<std::int64_t>(out));
    for (int t = 0; t < frames; ++t) units[t * pixels + p] = static_cast<std::int32_t>(out[t]);
  }
  return MaskCube(frames, mprime.height(), mprime.width(), lambda, std::move(units), structural);
}

}  // namespace

LearnableMask::LearnableMask(int frames, int height, int width, std::vector<double> values)
    : frames_(frames), height_(height), width_(width), values_(std::move(values)) {
  check_geometry(frames, height, width);
  if (values_.size() != static_cast<std::size_t>(frames) * height * width) {
    throw ShapeError("learnable mask payload does not match B x H x W");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("learnable mask values must lie in [0, 1]");
    }
  }
}

LearnableMask LearnableMask::uniform_random(int frames, int height, int width,
                                            std::uint64_t seed) {
  check_geometry(frames, height, width);
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(frames) * height * width);
  for (auto& v : values) v = rng.uniform();
  return LearnableMask(frames, height, width, std::move(values));
}

void LearnableMask::clamp() {
  for (auto& v : values_) v = std::clamp(v, 0.0, 1.0);
}

MaskCube::MaskCube(int frames, int height, int width, int lambda,
                   std::vector<std::int32_t> units, bool structural)
    : frames_(frames),
      height_(height),
      width_(width),
      lambda_(lambda),
      structural_(structural),
      units_(std::move(units)) {
  check_geometry(frames, height, width);
  check_lambda(lambda);
  if (units_.size() != static_cast<std::size_t>(frames) * height * width) {
    throw ShapeError("mask payload does not match B x H x W");
  }
}

std::int64_t MaskCube::column_units(int u, int v) const {
  std::int64_t sum = 0;
  for (int t = 0; t < frames_; ++t) sum += units(t, u, v);
  return sum;
}

std::vector<double> MaskCube::values() const {
  std::vector<double> out(units_.size());
  const double denom = scale();
  for (std::size_t i = 0; i < units_.size(); ++i) out[i] = units_[i] / denom;
  return out;
}

std::size_t ValidationReport::grid_violations() const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [](const Violation& v) { return v.kind == Violation::Kind::grid; }));
}

std::size_t ValidationReport::sum_violations() const {
  return violations.size() - grid_violations();
}

MaskCube random_binary(int frames, int height, int width, double p, std::uint64_t seed) {
  check_geometry(frames, height, width);
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("Bernoulli p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<std::int32_t> units(static_cast<std::size_t>(frames) * height * width);
  for (auto& u : units) u = rng.uniform() < p ? 1 : 0;
  return MaskCube(frames, height, width, 1, std::move(units), false);
}

MaskCube random_structural(int frames, int height, int width, int lambda, std::uint64_t seed) {
  return structuralize(LearnableMask::uniform_random(frames, height, width, seed), lambda);
}

MaskCube discretize(const LearnableMask& mprime, int lambda) {
  check_lambda(lambda);
  return map_columns(mprime, lambda, false,
                     [lambda](std::span<const double> column, std::span<std::int64_t> out) {
                       discretize_column(column, lambda, out);
                     });
}

MaskCube structuralize(const LearnableMask& mprime, int lambda) {
  check_lambda(lambda);
  if (lambda == 1) {
    return map_columns(mprime, 1, true,
                       [](std::span<const double> column, std::span<std::int64_t> out) {
                         one_hot_column(column, out);
                       });
  }
  if (mprime.frames() < 2) {
    throw std::invalid_argument(
        "a multi-bit structural mask needs at least two frames (each entry is below 1)");
  }
  const std::int64_t levels = std::int64_t{1} << lambda;
  return map_columns(mprime, lambda, true,
                     [lambda, levels](std::span<const double> column, std::span<std::int64_t> out) {
                       discretize_column(column, lambda, out);
                       redistribute_column(out, levels);
                       repair_column(out, levels);
                     });
}

ValidationReport validate(const MaskCube& mask) {
  ValidationReport report;
  const std::int32_t top = mask.max_units();
  for (int u = 0; u < mask.height(); ++u) {
    for (int v = 0; v < mask.width(); ++v) {
      std::int64_t sum = 0;
      for (int t = 0; t < mask.frames(); ++t) {
        const auto units = mask.units(t, u, v);
        sum += units;
        if (units < 0 || units > top) {
          report.violations.push_back({Violation::Kind::grid, t, u, v, units});
        }
      }
      if (mask.structural() && sum != mask.scale()) {
        report.violations.push_back({Violation::Kind::sum, -1, u, v, sum});
      }
    }
  }
  return report;
}

std::vector<std::int64_t> effective_levels(const MaskCube& mask, int kappa,
                                           std::optional<double> aperture) {
  if (kappa < 1 || kappa > 16) throw std::invalid_argument("kappa must be in [1, 16]");
  const double range = std::ldexp(1.0, kappa);
  const auto cap = static_cast<std::int64_t>(range);
  std::vector<std::int64_t> levels(mask.pixels());
  const double floor_value = std::ldexp(1.0, -mask.lambda());
  for (int u = 0; u < mask.height(); ++u) {
    for (int v = 0; v < mask.width(); ++v) {
      double gain = 0.0;
      if (aperture) {
        gain = *aperture;
      } else {
        const double sum =
            static_cast<double>(mask.column_units(u, v)) / static_cast<double>(mask.scale());
        gain = 1.0 / std::max(sum, floor_value);
      }
      const auto count = static_cast<std::int64_t>(std::floor(range * gain));
      levels[static_cast<std::size_t>(u) * mask.width() + v] = std::min(count, cap);
    }
  }
  return levels;
}

bool DmdPlanes::bit(std::size_t plane, int u, int v) const {
  const std::size_t byte = plane * plane_bytes() + static_cast<std::size_t>(u) * row_bytes() +
                           static_cast<std::size_t>(v) / 8;
  return (bytes[byte] >> (7 - (v % 8))) & 1u;
}

DmdPlanes to_dmd_planes(const MaskCube& mask) {
  DmdPlanes planes{mask.frames(), mask.height(), mask.width(), mask.lambda(), {}};
  planes.bytes.assign(planes.plane_count() * planes.plane_bytes(), 0);
  for (int t = 0; t < mask.frames(); ++t) {
    for (int b = 0; b < mask.lambda(); ++b) {
      const int shift = mask.lambda() - 1 - b;  // most significant plane first
      const std::size_t base = (static_cast<std::size_t>(t) * mask.lambda() + b) *
                               planes.plane_bytes();
      for (int u = 0; u < mask.height(); ++u) {
        for (int v = 0; v < mask.width(); ++v) {
          if ((mask.units(t, u, v) >> shift) & 1) {
            planes.bytes[base + static_cast<std::size_t>(u) * planes.row_bytes() + v / 8] |=
                static_cast<std::uint8_t>(0x80u >> (v % 8));
          }
        }
      }
    }
  }
  return planes;
}

MaskCube from_dmd_planes(const DmdPlanes& planes, bool structural) {
  std::vector<std::int32_t> units(static_cast<std::size_t>(planes.frames) * planes.height *
                                  planes.width);
  for (int t = 0; t < planes.frames; ++t) {
    for (int u = 0; u < planes.height; ++u) {
      for (int v = 0; v < planes.width; ++v) {
        std::int32_t value = 0;
        for (int b = 0; b < planes.lambda; ++b) {
          value = (value << 1) |
                  static_cast<std::int32_t>(
                      planes.bit(static_cast<std::size_t>(t) * planes.lambda + b, u, v));
        }
        units[(static_cast<std::size_t>(t) * planes.height + u) * planes.width + v] = value;
      }
    }
  }
  return MaskCube(planes.frames, planes.height, planes.width, planes.lambda, std::move(units),
                  structural);
}

void export_dmd(const MaskCube& mask, const std::filesystem::path& path) {
  const DmdPlanes planes = to_dmd_planes(mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io::ContainerError(io::ContainerError::Kind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(planes.bytes.data()),
            static_cast<std::streamsize>(planes.bytes.size()));
  if (!out) throw io::ContainerError(io::ContainerError::Kind::io, "write failed: " + path.string());

  nlohmann::ordered_json j;
  j["B"] = mask.frames();
  j["H"] = mask.height();
  j["W"] = mask.width();
  j["lambda"] = mask.lambda();
  j["plane_order"] = "msb_first";
  j["row_bytes"] = planes.row_bytes();
  j["planes"] = planes.plane_count();
  std::ofstream manifest(io::manifest_path(path), std::ios::trunc);
  manifest << j.dump(2) << '\n';
  if (!manifest) {
    throw io::ContainerError(io::ContainerError::Kind::io, "cannot write DMD manifest");
  }
}

DmdPlanes import_dmd(const std::filesystem::path& path) {
  std::ifstream manifest(io::manifest_path(path));
  if (!manifest) {
    throw io::ContainerError(io::ContainerError::Kind::io, "missing DMD manifest for " +
                                                               path.string());
  }
  nlohmann::json j;
  manifest >> j;
  if (j.value("plane_order", "") != "msb_first") {
    throw io::ContainerError(io::ContainerError::Kind::bad_header, "unsupported plane order");
  }
  DmdPlanes planes{j.at("B").get<int>(), j.at("H").get<int>(), j.at("W").get<int>(),
                   j.at("lambda").get<int>(), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::ContainerError(io::ContainerError::Kind::io, "cannot open " + path.string());
  planes.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (planes.bytes.size() != planes.plane_count() * planes.plane_bytes()) {
    throw io::ContainerError(io::ContainerError::Kind::truncated, "DMD plane file size mismatch");
  }
  return planes;
}

void save_mask(const std::filesystem::path& path, const MaskCube& mask) {
  io::ContainerHeader header;
  header.dtype = io::DType::int64;
  header.dims = {static_cast<std::uint32_t>(mask.frames()),
                 static_cast<std::uint32_t>(mask.height()),
                 static_cast<std::uint32_t>(mask.width())};
  std::vector<std::int64_t> wide(mask.units().begin(), mask.units().end());
  io::save_container(path, header, io::pack_i64(wide));
  io::write_manifest(path, {.role = "mask",
                            .frames = mask.frames(),
                            .height = mask.height(),
                            .width = mask.width(),
                            .lambda = mask.lambda(),
                            .structural = mask.structural()});
}

MaskCube load_mask(const std::filesystem::path& path) {
  auto [header, payload] = io::load_container(path);
  if (header.dtype != io::DType::int64 || header.dims.size() != 3) {
    throw io::ContainerError(io::ContainerError::Kind::bad_header,
                             path.string() + " is not a B x H x W int64 mask container");
  }
  const io::Manifest manifest = io::read_manifest(path);
  if (manifest.role != "mask" || !manifest.lambda) {
    throw io::ContainerError(io::ContainerError::Kind::bad_header,
                             path.string() + " manifest does not describe a mask");
  }
  const auto wide = io::unpack_i64(payload);
  std::vector<std::int32_t> units(wide.size());
  for (std::size_t i = 0; i < wide.size(); ++i) {
    if (wide[i] < std::numeric_limits<std::int32_t>::min() ||
        wide[i] > std::numeric_limits<std::int32_t>::max()) {
      throw io::ContainerError(io::ContainerError::Kind::bad_header, "mask units out of range");
    }
    units[i] = static_cast<std::int32_t>(wide[i]);
  }
  return MaskCube(static_cast<int>(header.dims[0]), static_cast<int>(header.dims[1]),
                  static_cast<int>(header.dims[2]), *manifest.lambda, std::move(units),
                  manifest.structural.value_or(false));
}

}  // namespace sci::mask
