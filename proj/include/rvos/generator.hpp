#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rvos/dataset.hpp"

namespace rvos {

struct GeneratorConfig {
  int n_videos = 4;
  int frames = 12;
  int height = 32;
  int width = 32;
  int objects_per_video = 2;
  int shape_min = 6;
  int shape_max = 10;
  Split split = Split::train;
  MaskStorage mask_storage = MaskStorage::rle;
  std::vector<std::string> shapes = {"square", "circle", "triangle"};
  std::vector<std::string> colors = {"red", "green", "blue", "yellow", "magenta", "cyan"};
  std::vector<std::string> motions = {"left", "right", "up", "down", "still", "circle"};
};

/// 8-bit RGB for a palette color name; throws ValidationError if unknown.
std::array<std::uint8_t, 3> palette_color(const std::string& name);
inline constexpr std::array<std::uint8_t, 3> kBackground = {40, 40, 40};

/// Writes frames, masks and `manifest.json` under `out_dir` and returns the
/// manifest. Deterministic in (config, seed). Throws GenerationError when the
/// canvas cannot hold the requested shapes.
DatasetManifest generate_synthetic_dataset(const GeneratorConfig& config, std::uint64_t seed,
                                           const std::filesystem::path& out_dir);

}  // namespace rvos
