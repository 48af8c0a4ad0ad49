// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/common.hpp"

#include <cstdint>
#include <filesystem>

namespace synthpose {

using Image8 = ImageT<std::uint8_t>;

/// Rounds [0, 1] display values to 8 bits; out-of-range values are clamped.
Image8 quantize8(const Image& display);
Image dequantize8(const Image8& img);

/// 8-bit gray, RGB or RGBA PNG.
void write_png(const Image8& img, const std::filesystem::path& path);
Image8 read_png(const std::filesystem::path& path);

/// Lossless float container: the line "FIMG1", one JSON header line
/// {"width", "height", "channels", "dtype": "float64"}, then little-endian
/// HWC samples.
void write_float_image(const Image& img, const std::filesystem::path& path);
Image read_float_image(const std::filesystem::path& path);

}  // namespace synthpose
