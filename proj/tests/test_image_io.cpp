// SPDX-License-Identifier: Apache-2.0
#include "synthpose/image_io.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace synthpose;

namespace {

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("synthpose_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("quantize8 rounds and clamps") {
  Image img(4, 1, 1);
  img.data << -0.5, 0.5, 1.0 / 255.0 * 0.49, 7.0;
  const Image8 q = quantize8(img);
  CHECK(q(0, 0) == 0);
  CHECK(q(1, 0) == 128);
  CHECK(q(2, 0) == 0);
  CHECK(q(3, 0) == 255);
}

TEST_CASE("png round-trips bit-exactly") {
  std::mt19937_64 rng(1);
  for (int channels : {1, 3, 4}) {
    Image8 img(13, 7, channels);
    for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(rng() & 0xff);
    const auto path = tmp("rt" + std::to_string(channels) + ".png");
    write_png(img, path);
    const Image8 back = read_png(path);
    REQUIRE(back.same_shape(img));
    CHECK((back.data == img.data).all());
  }
}

TEST_CASE("png encoding is deterministic") {
  Image8 img(8, 8, 3, 90);
  write_png(img, tmp("det_a.png"));
  write_png(img, tmp("det_b.png"));
  CHECK(slurp(tmp("det_a.png")) == slurp(tmp("det_b.png")));
}

TEST_CASE("png errors") {
  CHECK_THROWS_AS(read_png(tmp("missing.png")), IoError);
  CHECK_THROWS_AS(write_png(Image8(2, 2, 2), tmp("two.png")), DimensionError);
}

TEST_CASE("float container round-trips every bit") {
  Image img(5, 3, 2);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1e3);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = n(rng);
  img.data[0] = std::numeric_limits<double>::denorm_min();
  img.data[1] = -0.0;
  const auto path = tmp("float.fimg");
  write_float_image(img, path);
  const Image back = read_float_image(path);
  REQUIRE(back.same_shape(img));
  CHECK(std::memcmp(back.data.data(), img.data.data(), sizeof(double) * img.data.size()) == 0);
  const std::string bytes = slurp(path);
  CHECK(bytes.rfind("FIMG1\n{", 0) == 0);
}

TEST_CASE("float container rejects other files") {
  std::ofstream(tmp("bad.fimg")) << "P6\n";
  CHECK_THROWS_AS(read_float_image(tmp("bad.fimg")), SchemaError);
  write_float_image(Image(4, 4, 1), tmp("trunc.fimg"));
  std::filesystem::resize_file(tmp("trunc.fimg"), std::filesystem::file_size(tmp("trunc.fimg")) - 8);
  CHECK_THROWS_AS(read_float_image(tmp("trunc.fimg")), SchemaError);
}
