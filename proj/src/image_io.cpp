// SPDX-License-Identifier: Apache-2.0
#include "synthpose/image_io.hpp"

#include "synthpose/json_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace synthpose {

namespace {

static_assert(std::endian::native == std::endian::little, "float container assumes little-endian");

constexpr char kFloatMagic[] = "FIMG1";

png_uint_32 png_format(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default: throw DimensionError("png: unsupported channel count " + std::to_string(channels));
  }
}

}  // namespace

Image8 quantize8(const Image& display) {
  Image8 out(display.width, display.height, display.channels);
  for (Eigen::Index i = 0; i < display.data.size(); ++i) {
    const double v = std::clamp(display.data[i], 0.0, 1.0);
    out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

Image dequantize8(const Image8& img) {
  Image out(img.width, img.height, img.channels);
  out.data = img.data.cast<double>() / 255.0;
  return out;
}

void write_png(const Image8& img, const std::filesystem::path& path) {
  if (img.empty()) throw DimensionError("png: empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = png_format(img.channels);
  if (!png_image_write_to_file(&desc, path.c_str(), 0, img.data.data(), 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + desc.message);
}

Image8 read_png(const std::filesystem::path& path) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&desc, path.c_str()))
    throw IoError("cannot read " + path.string() + ": " + desc.message);
  const int channels = PNG_IMAGE_SAMPLE_CHANNELS(desc.format) >= 3
                           ? ((desc.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3)
                           : 1;
  desc.format = png_format(channels);
  Image8 img(static_cast<int>(desc.width), static_cast<int>(desc.height), channels);
  if (!png_image_finish_read(&desc, nullptr, img.data.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw IoError("cannot decode " + path.string() + ": " + desc.message);
  }
  return img;
}

void write_float_image(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const json header = {{"width", img.width},
                       {"height", img.height},
                       {"channels", img.channels},
                       {"dtype", "float64"}};
  out << kFloatMagic << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

Image read_float_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kFloatMagic) throw SchemaError(path.string() + ": not a float image");
  std::getline(in, header_line);
  try {
    const json h = json::parse(header_line);
    if (h.at("dtype").get<std::string>() != "float64")
      throw SchemaError(path.string() + ": unsupported dtype");
    Image img(h.at("width").get<int>(), h.at("height").get<int>(), h.at("channels").get<int>());
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size() * sizeof(double)))
      throw SchemaError(path.string() + ": truncated float image");
    return img;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace synthpose
