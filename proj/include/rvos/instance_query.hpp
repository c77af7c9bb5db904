#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rvos/backbone.hpp"

namespace rvos {

enum class ProviderKind { oracle, perturbed, file };

std::string to_string(ProviderKind k);
ProviderKind parse_provider(const std::string& s);

struct InstanceInitConfig {
  bool enabled = true;
  ProviderKind provider = ProviderKind::oracle;
  int k_max = 8;
  double score_threshold = 0.0;
  std::filesystem::path provider_dir;  // file provider: <dir>/<video_id>.json
  int perturb_radius = 1;              // > 0 dilates, < 0 erodes
  double perturb_dropout = 0.0;        // per-frame probability of an emptied mask
  std::uint64_t perturb_seed = 0;
  bool masked_rgb = false;   // encode mask * frame instead of the bare mask
  bool fuse_levels = false;  // sum pooled features over all levels instead of the coarsest only
};

/// Proposal instance masks for one clip, ordered by descending score then
/// ascending instance id.
struct InstanceMaskSet {
  std::vector<MaskTrack> masks;
  std::vector<int> instance_ids;
  std::vector<double> scores;

  int size() const { return static_cast<int>(masks.size()); }
};

/// `tracks` are the clip-aligned ground-truth tracks (object id → T masks),
/// used by the oracle and perturbed providers. Applies the score threshold and
/// the k_max cap. Throws AlignmentError when file masks do not fit the clip.
InstanceMaskSet provide_instance_masks(const VideoClip& clip, const std::map<int, MaskTrack>& tracks,
                                       const InstanceInitConfig& config);

/// Writes a file-provider document for `video_id`: one entry per instance with
/// per-source-frame RLE masks.
void write_instance_file(const std::filesystem::path& dir, const std::string& video_id, int height, int width,
                         const std::map<int, MaskTrack>& masks, const std::map<int, double>& scores);

void init_instance_block(ParamStore& p, const ModelDims& dims, Rng& rng, bool zero_output = true);
void init_initial_query(ParamStore& p, const ModelDims& dims, Rng& rng);

/// Cross-attention of the N query rows over the T temporal tokens of `inst`,
/// then `dims.self_layers` self-attention sublayers over N, then a feed-forward
/// sublayer. Pre-norm residual throughout. Parameters live under `prefix`.
Var attention_block(Binder& b, const Var& query, const Var& inst, const ModelDims& dims,
                    const std::string& prefix = "block");

/// Q_i = Block(Q_{i-1}, F_i) for i = 1..K with one shared parameter set.
Var aggregate_instance_queries(Binder& b, const Var& q0, const std::vector<Var>& instances, const ModelDims& dims,
                               const std::string& prefix = "block");

/// T×C pooled feature of one instance track.
Var instance_feature(Binder& b, const VideoClip& clip, const MaskTrack& masks, const ModelDims& dims,
                     const InstanceInitConfig& config);

/// Instance-initialized video query, or `q0` when instance init is disabled or
/// the set is empty.
Var build_video_query(Binder& b, const VideoClip& clip, const InstanceMaskSet& instances, const ModelDims& dims,
                      const InstanceInitConfig& config);

Var build_video_query(Binder& b, const VideoClip& clip, const std::map<int, MaskTrack>& tracks,
                      const ModelDims& dims, const InstanceInitConfig& config);

}  // namespace rvos
