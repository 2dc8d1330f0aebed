#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sci/container.hpp"

using namespace sci;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sci_unit_container";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Container, HeaderIsTwentyBytesForCube) {
  io::ContainerHeader h;
  h.dims = {8, 4, 4};
  EXPECT_EQ(io::encode_header(h).size(), 20u);
  EXPECT_EQ(h.header_bytes(), 20u);
}

TEST(Container, VideoRoundTripIsExact) {
  VideoCube v(3, 2, 5);
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = static_cast<float>(i) / 29.0f;
  const auto path = temp_file("video.scit");
  io::save_video(path, v);
  EXPECT_EQ(io::load_video(path), v);
  EXPECT_EQ(io::read_manifest(path).role, "video");
}

TEST(Container, MeasurementKeepsKappaAndAperture) {
  Measurement y(2, 2, 10, {0, 1, 512, 1023});
  const auto path = temp_file("meas.scit");
  io::save_measurement(path, y, 0.25);
  EXPECT_EQ(io::load_measurement(path), y);
  EXPECT_EQ(io::read_manifest(path).kappa, 10);
  EXPECT_DOUBLE_EQ(*io::read_manifest(path).aperture, 0.25);
}

TEST(Container, RejectsBadMagic) {
  const auto path = temp_file("bad.scit");
  std::ofstream(path, std::ios::binary) << "NOPE0000000000000000";
  try {
    io::load_container(path);
    FAIL() << "expected ContainerError";
  } catch (const io::ContainerError& e) {
    EXPECT_EQ(e.kind(), io::ContainerError::Kind::bad_magic);
  }
}

TEST(Container, RejectsTruncatedPayload) {
  VideoCube v(2, 2, 2, 0.5f);
  const auto path = temp_file("trunc.scit");
  io::save_video(path, v);
  fs::resize_file(path, fs::file_size(path) - 4);
  EXPECT_THROW(io::load_video(path), io::ContainerError);
}

TEST(Container, MissingFileIsIoError) {
  try {
    io::load_container(temp_file("absent.scit"));
    FAIL() << "expected ContainerError";
  } catch (const io::ContainerError& e) {
    EXPECT_EQ(e.kind(), io::ContainerError::Kind::io);
  }
}
