#include "rvos/backbone.hpp"

#include "rvos/errors.hpp"
#include "rvos/nn.hpp"

namespace rvos {

std::vector<int> patch_index(int frames, int height, int width, int k) {
  const int oh = (height + k - 1) / k, ow = (width + k - 1) / k;
  std::vector<int> index;
  index.reserve(static_cast<std::size_t>(frames * oh * ow * k * k));
  for (int t = 0; t < frames; ++t)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const int r = y * k + dy, c = x * k + dx;
            index.push_back(r < height && c < width ? (t * height + r) * width + c : -1);
          }
  return index;
}

void init_backbone(ParamStore& p, const ModelDims& dims, Rng& rng) {
  int in = 3;
  for (int j = 0; j < dims.num_levels(); ++j) {
    const int k = dims.stage_kernel(j);
    const int out = dims.level_channels[static_cast<std::size_t>(j)];
    nn::init_linear(p, "backbone.stage" + std::to_string(j), k * k * in, out, rng);
    in = out;
  }
}

void init_text(ParamStore& p, const ModelDims& dims, Rng& rng) {
  Matrix table(dims.resolved_vocab_size(), dims.channels);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = rng.normal();
  p.set("text.embed", std::move(table));
  Matrix cls(1, dims.channels);
  for (Eigen::Index i = 0; i < cls.size(); ++i) cls.data()[i] = rng.normal();
  p.set("text.cls", std::move(cls));
}

void init_projection(ParamStore& p, const ModelDims& dims, Rng& rng) {
  for (int j = 0; j < dims.num_levels(); ++j)
    nn::init_linear(p, "proj." + std::to_string(j), dims.level_channels[static_cast<std::size_t>(j)],
                    dims.channels, rng);
}

MultiScaleFeatures extract_visual_features(Binder& b, const Matrix& pixels, int frames, int height, int width,
                                           const ModelDims& dims) {
  if (frames < 1 || height < 1 || width < 1) throw DomainError("extract_visual_features: empty input");
  if (pixels.rows() != static_cast<Eigen::Index>(frames) * height * width || pixels.cols() != 3)
    throw DomainError("extract_visual_features: expected (T*H*W)x3 input");
  if (!pixels.allFinite()) throw DomainError("extract_visual_features: non-finite input");

  MultiScaleFeatures out;
  Var x = b.constant(pixels);
  int h = height, w = width;
  for (int j = 0; j < dims.num_levels(); ++j) {
    const int k = dims.stage_kernel(j);
    Var patches = ad::gather_rows(x, patch_index(frames, h, w, k), static_cast<Eigen::Index>(k) * k);
    x = ad::silu(nn::linear(b, patches, "backbone.stage" + std::to_string(j)));
    h = (h + k - 1) / k;
    w = (w + k - 1) / k;
    out.levels.push_back(FeatureLevel{x, frames, h, w, dims.level_strides[static_cast<std::size_t>(j)]});
  }
  return out;
}

MultiScaleFeatures extract_visual_features(Binder& b, const VideoClip& clip, const ModelDims& dims) {
  return extract_visual_features(b, stack_frames(clip.frames), clip.num_frames(), clip.height(), clip.width(),
                                 dims);
}

MultiScaleFeatures extract_visual_features(Binder& b, const MaskTrack& masks, const ModelDims& dims) {
  if (masks.empty()) throw DomainError("extract_visual_features: empty mask track");
  for (const auto& m : masks)
    if (!is_binary(m)) throw DomainError("extract_visual_features: mask is not binary");
  return extract_visual_features(b, stack_masks(masks), static_cast<int>(masks.size()),
                                 static_cast<int>(masks.front().rows()), static_cast<int>(masks.front().cols()),
                                 dims);
}

TextEmbedding embed_text(Binder& b, const Vocabulary& vocab, const std::string& expression) {
  const auto ids = vocab.encode(expression);
  const Var table = b("text.embed");
  for (int id : ids)
    if (id >= table.rows()) throw DomainError("embed_text: token id outside the embedding table");
  return TextEmbedding{ad::gather_rows(table, std::vector<int>(ids.begin(), ids.end())), b("text.cls")};
}

Var project_and_pool(Binder& b, const MultiScaleFeatures& feat, int level, const std::string& prefix) {
  if (level < 0 || level >= static_cast<int>(feat.levels.size()))
    throw DomainError("project_and_pool: level " + std::to_string(level) + " out of range");
  const FeatureLevel& f = feat.levels[static_cast<std::size_t>(level)];
  const Var projected = nn::linear(b, f.values, prefix + "." + std::to_string(level));
  return ad::group_mean_rows(projected, f.tokens_per_frame());
}

}  // namespace rvos
