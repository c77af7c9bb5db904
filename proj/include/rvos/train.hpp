#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rvos/model.hpp"

namespace rvos {

struct TrainConfig {
  int steps = 500;
  double lr = 3e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int accumulation = 2;  // backward passes per optimizer update
  int batch = 1;
  std::uint64_t seed = 0;  // clip sampling during training
  std::uint64_t init_seed = 0;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& config) : config_(config) {}

  /// One update from (already averaged) gradients. Parameters without a
  /// gradient entry only receive weight decay.
  void update(ParamStore& params, const Gradients& grads);
  int updates() const { return t_; }

 private:
  TrainConfig config_;
  std::map<std::string, Matrix> m_, v_;
  int t_ = 0;
};

struct TrainingExample {
  VideoClip clip;
  std::string expression;
  std::vector<MaskTrack> targets;        // one track per referred object
  std::map<int, MaskTrack> tracks;       // every object of the clip, for the instance provider
};

struct LossBreakdown {
  double total = 0;
  double mask_bce = 0;
  double dice = 0;
  double score_bce = 0;
  std::vector<std::pair<int, int>> matching;  // (query, target)
};

/// Flattens a track into a 1×(T*H*W) {0,1} row.
Matrix flatten_track(const MaskTrack& track);

/// Soft Dice loss 1 - (2<p,t> + 1) / (sum p + sum t + 1) on probabilities.
double dice_loss(const Eigen::RowVectorXd& prob, const Eigen::RowVectorXd& target);

/// Minimum-cost one-to-one assignment of targets to queries by exhaustive
/// search. cost(n, m) = BCE(mask_n, t_m) + Dice(mask_n, t_m) + BCE(score_n, 1).
std::vector<std::pair<int, int>> match_queries(const Matrix& mask_logits, const Matrix& score_logits,
                                               const std::vector<Matrix>& targets);

/// Mean over matched pairs of (mask BCE + Dice), plus score BCE over all
/// queries (1 for matched, 0 otherwise).
Var segmentation_loss(const HeadOutput& head, const std::vector<Matrix>& targets, LossBreakdown* breakdown = nullptr);

/// Owns the optimizer state and gradient accumulation for one parameter store.
class Trainer {
 public:
  Trainer(ParamStore& params, ModelDims dims, InstanceInitConfig instance_init, TrainConfig config);

  /// Forward + backward on one example; applies an AdamW update once every
  /// `accumulation` calls. Throws NumericError on a non-finite loss.
  double step(const TrainingExample& example, LossBreakdown* breakdown = nullptr);

  int steps_taken() const { return steps_; }
  int updates() const { return optimizer_.updates(); }
  double learning_rate() const { return config_.lr; }

 private:
  ParamStore& params_;
  ModelDims dims_;
  InstanceInitConfig instance_init_;
  TrainConfig config_;
  AdamW optimizer_;
  Gradients pending_;
  int pending_count_ = 0;
  int steps_ = 0;
};

}  // namespace rvos
