#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rvos/dataset.hpp"

namespace rvos {

struct JFScore {
  double J = 0.0;
  double F = 0.0;
  double JF = 0.0;
};

struct MetricsReport {
  std::map<std::string, JFScore> per_expression;
  JFScore aggregate;
  int n_expressions = 0;
  int tolerance = 0;
};

/// Per-expression prediction: the sampled source frame indices and one mask per index.
struct Prediction {
  std::vector<int> frame_indices;
  MaskTrack masks;
};

/// Mean per-frame IoU. Both empty scores 1, one-sided empty scores 0.
double region_similarity(const MaskTrack& pred, const MaskTrack& gt);

/// Foreground pixels 4-adjacent to background or the image border.
Mask boundary_pixels(const Mask& m);

/// Mean per-frame boundary F-measure with a Euclidean pixel tolerance.
double contour_accuracy(const MaskTrack& pred, const MaskTrack& gt, int tolerance);

/// ceil(0.008 * sqrt(H^2 + W^2)).
int default_tolerance(int height, int width);

JFScore jf_score(const MaskTrack& pred, const MaskTrack& gt, int tolerance);

/// Ground truth is the union of each expression's targets at the predicted
/// frame indices. tolerance < 0 selects default_tolerance per video.
/// Throws CoverageError naming every expression without a prediction.
MetricsReport evaluate_dataset(const std::map<std::string, Prediction>& predictions, const DatasetManifest& manifest,
                               int tolerance = -1);

void write_report_json(const std::filesystem::path& path, const MetricsReport& report);
std::string report_markdown(const MetricsReport& report);
MetricsReport read_report_json(const std::filesystem::path& path);

}  // namespace rvos
