#pragma once

#include <filesystem>

#include "rvos/tensor.hpp"

namespace rvos {

/// 8-bit RGB PNG. Values are quantized to k/255.
void write_rgb_png(const std::filesystem::path& path, const Image& image);
Image read_rgb_png(const std::filesystem::path& path);

/// 8-bit grayscale PNG holding 0/255.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Pixels >= 128 read as foreground.
Mask read_mask_png(const std::filesystem::path& path);

}  // namespace rvos
