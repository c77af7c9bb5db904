#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rvos/config.hpp"
#include "rvos/dataset.hpp"
#include "rvos/metrics.hpp"
#include "rvos/params.hpp"

namespace rvos {

/// Sampled source frame indices of `video` under `plan`; every expression of
/// a video shares one clip.
std::vector<int> clip_indices(const VideoEntry& video, const SamplingPlan& plan);

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

/// Trains `params` for `config.train.steps` steps on `expression_ids`, drawing
/// one expression and one fresh clip per step. `on_step` sees every record.
void train_model(ParamStore& params, const DatasetManifest& manifest, const std::vector<std::string>& expression_ids,
                 const RunConfig& config, const std::function<void(const TrainRecord&)>& on_step = {});

/// Forward pass (plus optional refinement) for every expression in the manifest.
std::map<std::string, Prediction> predict_dataset(const ParamStore& params, const DatasetManifest& manifest,
                                                  const RunConfig& config);

void write_predictions(const std::filesystem::path& dir, const DatasetManifest& manifest,
                       const std::map<std::string, Prediction>& predictions);
std::map<std::string, Prediction> read_predictions(const std::filesystem::path& dir);

struct OverfitResult {
  std::string expression_id;
  JFScore train_score;
  double final_loss = 0.0;
  int steps = 0;
  std::filesystem::path checkpoint;
};

struct AblationRow {
  SamplingMethod sampling = SamplingMethod::global;
  bool instance_masks = false;
  bool refine = false;
  JFScore score;
  bool failed = false;
  std::string error;

  std::string tag() const;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  bool all_ok() const;
};

/// The six (sampling, instance masks, refine) combinations in table order.
std::vector<AblationRow> ablation_grid();

DatasetManifest cmd_gen_data(const RunConfig& config);
OverfitResult cmd_overfit(const RunConfig& config);
std::map<std::string, Prediction> cmd_infer(const RunConfig& config);
MetricsReport cmd_eval(const RunConfig& config);
AblationResult cmd_ablate(const RunConfig& config);

std::string ablation_markdown(const AblationResult& result, const RunConfig& config);

}  // namespace rvos
