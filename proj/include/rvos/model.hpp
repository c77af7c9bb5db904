#pragma once

// Toy multimodal temporal transformer: text/visual fusion across feature
// levels, frame-independent query decoding, temporal interaction per object,
// a video-wise query decoder and a query-based mask head.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rvos/backbone.hpp"
#include "rvos/instance_query.hpp"

namespace rvos {

/// Counters filled in by a forward pass when requested.
struct ForwardTrace {
  int mta_blocks = 0;
};

struct MtaOutput {
  Var class_token;            // 1×C
  MultiScaleFeatures visual;  // every level projected to C and text-conditioned
};

/// Raw head outputs kept on the graph for training.
struct HeadOutput {
  Var mask_logits;   // N × (T*H*W)
  Var score_logits;  // N × 1
  int frames = 0;
  int height = 0;
  int width = 0;
};

struct SegmentationOutput {
  Matrix mask_logits;            // N × (T*H*W)
  Eigen::VectorXd query_scores;  // N, in [0,1]
  std::vector<int> selected;     // queries whose masks form binary_masks
  MaskTrack binary_masks;        // T masks of H×W
  int frames = 0;
  int height = 0;
  int width = 0;

  bool operator==(const SegmentationOutput& o) const;
};

/// Initializes every parameter of the pipeline (backbone, text, projection,
/// instance block, q0, fusion, decoders, head).
ParamStore init_model(const ModelDims& dims, std::uint64_t seed);
void init_mutr(ParamStore& p, const ModelDims& dims, Rng& rng);

/// One cross-attention block per level, applied in order: visual tokens attend
/// to the multimodal tokens (text + class), then the multimodal tokens attend
/// to that level's flattened spatio-temporal tokens, then a feed-forward.
MtaOutput mta_fuse(Binder& b, const TextEmbedding& text, const MultiScaleFeatures& visual, const ModelDims& dims,
                   ForwardTrace* trace = nullptr);

/// Class token repeated N times per frame, refined by D decoder layers that
/// only see that frame's fused features. Returns (T*N)×C, frame-major.
Var frame_decode(Binder& b, const MultiScaleFeatures& fused, const Var& class_token, const ModelDims& dims);

/// Self-attention over the T positions of each query index; no mixing across
/// query indices. Batched with a block attention mask.
Var mti_encode(Binder& b, const Var& objects, int frames, const ModelDims& dims);
/// Same computation as mti_encode with an explicit loop over query indices.
Var mti_encode_reference(Binder& b, const Var& objects, int frames, const ModelDims& dims);

/// Video query (N×C) cross-attends to the T*N encoder outputs, then
/// self-attention and a feed-forward.
Var mti_decode(Binder& b, const Var& encoded, const Var& video_query, const ModelDims& dims);

/// Query mask embeddings dotted with full-resolution pixel embeddings. The
/// pixel embedding combines the nearest-upsampled finest fused level with a
/// per-pixel projection of the frame colors.
HeadOutput predict_mask_logits(Binder& b, const Var& video_query, const MultiScaleFeatures& fused,
                               const Matrix& pixels, int frames, int height, int width, const ModelDims& dims);

/// Query selection and thresholding: every query with score > 0.5 (else the
/// arg-max query); binary mask = union of sigmoid(logit) > 0.5 over selected.
SegmentationOutput finalize_output(const Matrix& mask_logits, const Matrix& score_logits, int frames, int height,
                                   int width);

struct PipelineInputs {
  const VideoClip* clip = nullptr;
  std::string expression;
  const std::map<int, MaskTrack>* tracks = nullptr;  // clip-aligned tracks for the instance provider
};

/// embed_text → backbone → mta_fuse → frame_decode → mti_encode →
/// build_video_query → mti_decode → head, on an existing graph.
HeadOutput forward_graph(Binder& b, const PipelineInputs& in, const ModelDims& dims,
                         const InstanceInitConfig& instance_init, ForwardTrace* trace = nullptr);

SegmentationOutput forward_pipeline(const ParamStore& params, const PipelineInputs& in, const ModelDims& dims,
                                    const InstanceInitConfig& instance_init);

}  // namespace rvos
