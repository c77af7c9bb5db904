#pragma once

#include <string>
#include <vector>

#include "rvos/model_dims.hpp"
#include "rvos/params.hpp"
#include "rvos/rng.hpp"
#include "rvos/vocabulary.hpp"

namespace rvos {

/// One feature level: (frames*height*width) × channels, frame-major then
/// row-major spatial order.
struct FeatureLevel {
  Var values;
  int frames = 0;
  int height = 0;
  int width = 0;
  int stride = 0;

  int tokens_per_frame() const { return height * width; }
  int channels() const { return static_cast<int>(values.cols()); }
};

struct MultiScaleFeatures {
  std::vector<FeatureLevel> levels;

  int num_frames() const { return levels.empty() ? 0 : levels.front().frames; }
};

struct TextEmbedding {
  Var tokens;       // L_text × C
  Var class_token;  // 1 × C
};

/// im2col indices for a non-overlapping k×k patch convolution over a T×H×W
/// grid; out-of-range taps are -1 (zero padding). Output grid is ceil(H/k)×ceil(W/k).
std::vector<int> patch_index(int frames, int height, int width, int k);

void init_backbone(ParamStore& p, const ModelDims& dims, Rng& rng);
void init_text(ParamStore& p, const ModelDims& dims, Rng& rng);
/// `proj.{j}` maps level j (width c_j) to C.
void init_projection(ParamStore& p, const ModelDims& dims, Rng& rng);

/// Strided convolution stack, applied to every frame independently.
/// `pixels` is (T*H*W)×3. Throws DomainError on non-finite input.
MultiScaleFeatures extract_visual_features(Binder& b, const Matrix& pixels, int frames, int height, int width,
                                           const ModelDims& dims);
MultiScaleFeatures extract_visual_features(Binder& b, const VideoClip& clip, const ModelDims& dims);
/// Binary masks are replicated to three channels before encoding.
MultiScaleFeatures extract_visual_features(Binder& b, const MaskTrack& masks, const ModelDims& dims);

/// Whitespace tokens → table rows (`text.embed`), plus the learned `text.cls`.
TextEmbedding embed_text(Binder& b, const Vocabulary& vocab, const std::string& expression);

/// Pointwise linear c_j → C, then the mean over each frame's h_j×w_j positions.
/// Returns T×C.
Var project_and_pool(Binder& b, const MultiScaleFeatures& feat, int level, const std::string& prefix = "proj");

}  // namespace rvos
