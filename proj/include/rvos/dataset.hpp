#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rvos/tensor.hpp"

namespace rvos {

enum class Split { train, valid, test };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ExpressionSample {
  std::string expression_id;
  std::string video_id;
  std::string expression;
  std::vector<int> target_object_ids;  // sorted, unique
};

struct VideoEntry {
  std::string video_id;
  int source_length = 0;
  int height = 0;
  int width = 0;
  std::vector<std::string> frame_paths;  // relative to the manifest directory
  std::vector<Image> frames;             // decoded frame_paths
  std::map<int, MaskTrack> objects;      // object_id -> source_length masks

  /// Clip of the frames at `indices` (validated).
  VideoClip clip(const std::vector<int>& indices) const;
  /// Object tracks restricted to `indices`.
  std::map<int, MaskTrack> tracks_at(const std::vector<int>& indices) const;
};

struct DatasetManifest {
  std::filesystem::path root;
  Split split = Split::train;
  std::map<std::string, VideoEntry> videos;
  std::vector<ExpressionSample> expressions;

  const VideoEntry& video(const std::string& id) const;
  const ExpressionSample& expression(const std::string& expression_id) const;

  /// Pixel-wise union of the expression's target masks at `indices`.
  MaskTrack target_union(const ExpressionSample& e, const std::vector<int>& indices) const;
  /// One track per target object at `indices`, ordered by object id.
  std::vector<MaskTrack> target_tracks(const ExpressionSample& e, const std::vector<int>& indices) const;
};

/// Masks are written inline as RLE (`rle`) or as PNG files (`mask_paths`).
enum class MaskStorage { rle, png };

/// Reads and validates `manifest.json` (or a directory containing it).
/// Throws LoadError for missing/undecodable files, ValidationError naming the
/// offending key on schema problems, ReferentialIntegrityError for dangling ids.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes `manifest.json` under manifest.root. Frames must already be on disk
/// at their frame_paths; PNG masks are written when storage is png.
void save_manifest(const DatasetManifest& manifest, MaskStorage storage = MaskStorage::rle);

}  // namespace rvos
