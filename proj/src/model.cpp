#include "rvos/model.hpp"

#include "rvos/errors.hpp"
#include "rvos/nn.hpp"

namespace rvos {

namespace {

std::string level_key(const std::string& prefix, int j) { return prefix + "." + std::to_string(j); }

}  // namespace

bool SegmentationOutput::operator==(const SegmentationOutput& o) const {
  if (frames != o.frames || height != o.height || width != o.width) return false;
  if (mask_logits.rows() != o.mask_logits.rows() || mask_logits.cols() != o.mask_logits.cols()) return false;
  if (mask_logits != o.mask_logits || query_scores != o.query_scores || selected != o.selected) return false;
  if (binary_masks.size() != o.binary_masks.size()) return false;
  for (std::size_t t = 0; t < binary_masks.size(); ++t)
    if (!(binary_masks[t] == o.binary_masks[t]).all()) return false;
  return true;
}

void init_mutr(ParamStore& p, const ModelDims& dims, Rng& rng) {
  const int C = dims.channels;
  for (int j = 0; j < dims.num_levels(); ++j) {
    nn::init_linear(p, level_key("mta.in", j), dims.level_channels[static_cast<std::size_t>(j)], C, rng);
    nn::init_cross_attention_sublayer(p, level_key("mta", j) + ".vis", C, rng, false);
    nn::init_cross_attention_sublayer(p, level_key("mta", j) + ".txt", C, rng, false);
    nn::init_ffn_sublayer(p, level_key("mta", j) + ".ffn", C, rng, false);
  }
  for (int d = 0; d < dims.decoder_layers; ++d) {
    nn::init_cross_attention_sublayer(p, level_key("dec", d) + ".ca", C, rng, false);
    nn::init_self_attention_sublayer(p, level_key("dec", d) + ".sa", C, rng, false);
    nn::init_ffn_sublayer(p, level_key("dec", d) + ".ffn", C, rng, false);
  }
  nn::init_self_attention_sublayer(p, "mti.enc.sa", C, rng, false);
  nn::init_ffn_sublayer(p, "mti.enc.ffn", C, rng, false);
  nn::init_cross_attention_sublayer(p, "mti.dec.ca", C, rng, false);
  nn::init_self_attention_sublayer(p, "mti.dec.sa", C, rng, false);
  nn::init_ffn_sublayer(p, "mti.dec.ffn", C, rng, false);
  nn::init_linear(p, "head.pix_feat", C, C, rng);
  nn::init_linear(p, "head.pix_rgb", 3, C, rng);
  nn::init_linear(p, "head.pix_out", C, C, rng);
  nn::init_linear(p, "head.mask1", C, C, rng);
  nn::init_linear(p, "head.mask2", C, C, rng);
  nn::init_linear(p, "head.score", C, 1, rng);
}

ParamStore init_model(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ParamStore p;
  Rng rng(seed);
  init_backbone(p, dims, rng);
  init_text(p, dims, rng);
  init_projection(p, dims, rng);
  init_instance_block(p, dims, rng, true);
  init_initial_query(p, dims, rng);
  init_mutr(p, dims, rng);
  return p;
}

MtaOutput mta_fuse(Binder& b, const TextEmbedding& text, const MultiScaleFeatures& visual, const ModelDims& dims,
                   ForwardTrace* trace) {
  if (static_cast<int>(visual.levels.size()) != dims.num_levels())
    throw DomainError("mta_fuse: expected " + std::to_string(dims.num_levels()) + " feature levels");
  if (text.tokens.cols() != dims.channels || text.class_token.cols() != dims.channels ||
      text.class_token.rows() != 1)
    throw DomainError("mta_fuse: text embedding width mismatch");
  Var tokens = ad::vcat<double>({text.tokens, text.class_token});
  MtaOutput out;
  for (int j = 0; j < dims.num_levels(); ++j) {
    const FeatureLevel& level = visual.levels[static_cast<std::size_t>(j)];
    if (level.channels() != dims.level_channels[static_cast<std::size_t>(j)])
      throw DomainError("mta_fuse: level " + std::to_string(j) + " width mismatch");
    const std::string key = level_key("mta", j);
    Var vis = nn::linear(b, level.values, level_key("mta.in", j));
    vis = nn::cross_attention_sublayer(b, vis, tokens, key + ".vis", dims.heads);
    tokens = nn::cross_attention_sublayer(b, tokens, vis, key + ".txt", dims.heads);
    tokens = nn::ffn_sublayer(b, tokens, key + ".ffn");
    out.visual.levels.push_back(FeatureLevel{vis, level.frames, level.height, level.width, level.stride});
    if (trace) ++trace->mta_blocks;
  }
  out.class_token = ad::rows(tokens, tokens.rows() - 1, 1);
  return out;
}

Var frame_decode(Binder& b, const MultiScaleFeatures& fused, const Var& class_token, const ModelDims& dims) {
  if (fused.levels.empty()) throw DomainError("frame_decode: no feature levels");
  if (class_token.rows() != 1 || class_token.cols() != dims.channels)
    throw DomainError("frame_decode: class token must be 1x" + std::to_string(dims.channels));
  for (const auto& level : fused.levels)
    if (level.channels() != dims.channels) throw DomainError("frame_decode: fused features must have width C");
  const int T = fused.num_frames();
  std::vector<Var> per_frame;
  for (int t = 0; t < T; ++t) {
    Var x = ad::repeat_rows(class_token, dims.queries);
    for (int d = 0; d < dims.decoder_layers; ++d) {
      const FeatureLevel& level = fused.levels[static_cast<std::size_t>(d) % fused.levels.size()];
      const Var memory = ad::rows(level.values, static_cast<Eigen::Index>(t) * level.tokens_per_frame(),
                                  level.tokens_per_frame());
      const std::string key = level_key("dec", d);
      x = nn::cross_attention_sublayer(b, x, memory, key + ".ca", dims.heads);
      x = nn::self_attention_sublayer(b, x, key + ".sa", dims.heads);
      x = nn::ffn_sublayer(b, x, key + ".ffn");
    }
    per_frame.push_back(x);
  }
  return ad::vcat(per_frame);
}

namespace {

void check_objects(const Var& objects, int frames, const ModelDims& dims, const char* op) {
  if (frames < 1 || objects.rows() != static_cast<Eigen::Index>(frames) * dims.queries ||
      objects.cols() != dims.channels)
    throw DomainError(std::string(op) + ": expected (T*N)xC object queries");
}

}  // namespace

Var mti_encode(Binder& b, const Var& objects, int frames, const ModelDims& dims) {
  check_objects(objects, frames, dims, "mti_encode");
  const Eigen::Index n = objects.rows();
  Matrix mask(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) mask(i, j) = (i % dims.queries == j % dims.queries) ? 0.0 : -1e30;
  Var x = nn::self_attention_sublayer(b, objects, "mti.enc.sa", dims.heads, &mask);
  return nn::ffn_sublayer(b, x, "mti.enc.ffn");
}

Var mti_encode_reference(Binder& b, const Var& objects, int frames, const ModelDims& dims) {
  check_objects(objects, frames, dims, "mti_encode_reference");
  std::vector<Var> tracks;
  for (int q = 0; q < dims.queries; ++q) {
    std::vector<int> idx;
    for (int t = 0; t < frames; ++t) idx.push_back(t * dims.queries + q);
    Var seq = ad::gather_rows(objects, idx);
    seq = nn::self_attention_sublayer(b, seq, "mti.enc.sa", dims.heads);
    tracks.push_back(nn::ffn_sublayer(b, seq, "mti.enc.ffn"));
  }
  // Back to frame-major order.
  const Var stacked = ad::vcat(tracks);  // query-major
  std::vector<int> idx;
  for (int t = 0; t < frames; ++t)
    for (int q = 0; q < dims.queries; ++q) idx.push_back(q * frames + t);
  return ad::gather_rows(stacked, idx);
}

Var mti_decode(Binder& b, const Var& encoded, const Var& video_query, const ModelDims& dims) {
  if (video_query.rows() != dims.queries || video_query.cols() != dims.channels)
    throw DomainError("mti_decode: video query must be " + std::to_string(dims.queries) + "x" +
                      std::to_string(dims.channels));
  if (encoded.cols() != dims.channels) throw DomainError("mti_decode: encoder output width mismatch");
  Var x = nn::cross_attention_sublayer(b, video_query, encoded, "mti.dec.ca", dims.heads);
  x = nn::self_attention_sublayer(b, x, "mti.dec.sa", dims.heads);
  return nn::ffn_sublayer(b, x, "mti.dec.ffn");
}

HeadOutput predict_mask_logits(Binder& b, const Var& video_query, const MultiScaleFeatures& fused,
                               const Matrix& pixels, int frames, int height, int width, const ModelDims& dims) {
  if (fused.levels.empty()) throw DomainError("predict_mask_logits: no feature levels");
  if (video_query.rows() != dims.queries || video_query.cols() != dims.channels)
    throw DomainError("predict_mask_logits: video query shape mismatch");
  if (pixels.rows() != static_cast<Eigen::Index>(frames) * height * width || pixels.cols() != 3)
    throw DomainError("predict_mask_logits: pixel matrix shape mismatch");
  const FeatureLevel& fine = fused.levels.front();
  std::vector<int> up;
  up.reserve(static_cast<std::size_t>(frames * height * width));
  for (int t = 0; t < frames; ++t)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        up.push_back((t * fine.height + y / fine.stride) * fine.width + x / fine.stride);
  const Var feat = ad::gather_rows(nn::linear(b, fine.values, "head.pix_feat"), std::move(up));
  const Var color = nn::linear(b, b.constant(pixels), "head.pix_rgb");
  const Var pixel_embed = nn::linear(b, ad::silu(ad::add(feat, color)), "head.pix_out");
  const Var mask_embed = nn::linear(b, ad::silu(nn::linear(b, video_query, "head.mask1")), "head.mask2");
  HeadOutput out;
  out.mask_logits = ad::matmul_bt(mask_embed, pixel_embed);
  out.score_logits = nn::linear(b, video_query, "head.score");
  out.frames = frames;
  out.height = height;
  out.width = width;
  return out;
}

SegmentationOutput finalize_output(const Matrix& mask_logits, const Matrix& score_logits, int frames, int height,
                                   int width) {
  const Eigen::Index hw = static_cast<Eigen::Index>(height) * width;
  if (mask_logits.cols() != frames * hw || score_logits.rows() != mask_logits.rows() || score_logits.cols() != 1 ||
      mask_logits.rows() < 1)
    throw DomainError("finalize_output: shape mismatch");
  SegmentationOutput out;
  out.mask_logits = mask_logits;
  out.frames = frames;
  out.height = height;
  out.width = width;
  out.query_scores = score_logits.col(0).unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  for (Eigen::Index n = 0; n < out.query_scores.size(); ++n)
    if (out.query_scores(n) > 0.5) out.selected.push_back(static_cast<int>(n));
  if (out.selected.empty()) {
    Eigen::Index best = 0;
    out.query_scores.maxCoeff(&best);
    out.selected.push_back(static_cast<int>(best));
  }
  for (int t = 0; t < frames; ++t) {
    Mask m = Mask::Zero(height, width);
    for (int n : out.selected)
      for (Eigen::Index i = 0; i < hw; ++i)
        if (mask_logits(n, t * hw + i) > 0.0) m.data()[i] = 1;  // sigmoid(z) > 0.5
    out.binary_masks.push_back(std::move(m));
  }
  return out;
}

HeadOutput forward_graph(Binder& b, const PipelineInputs& in, const ModelDims& dims,
                         const InstanceInitConfig& instance_init, ForwardTrace* trace) {
  if (!in.clip) throw DomainError("forward_graph: no clip");
  const VideoClip& clip = *in.clip;
  clip.validate();
  static const std::map<int, MaskTrack> kNoTracks;
  const auto& tracks = in.tracks ? *in.tracks : kNoTracks;

  const TextEmbedding text = embed_text(b, Vocabulary::synthetic(), in.expression);
  const Matrix pixels = stack_frames(clip.frames);
  const MultiScaleFeatures visual =
      extract_visual_features(b, pixels, clip.num_frames(), clip.height(), clip.width(), dims);
  const MtaOutput fused = mta_fuse(b, text, visual, dims, trace);
  const Var objects = frame_decode(b, fused.visual, fused.class_token, dims);
  const Var encoded = mti_encode(b, objects, clip.num_frames(), dims);
  const Var video_query = build_video_query(b, clip, tracks, dims, instance_init);
  const Var decoded = mti_decode(b, encoded, video_query, dims);
  return predict_mask_logits(b, decoded, fused.visual, pixels, clip.num_frames(), clip.height(), clip.width(),
                             dims);
}

SegmentationOutput forward_pipeline(const ParamStore& params, const PipelineInputs& in, const ModelDims& dims,
                                    const InstanceInitConfig& instance_init) {
  Graph g;
  Binder b(g, params, false);
  const HeadOutput head = forward_graph(b, in, dims, instance_init);
  return finalize_output(head.mask_logits.value(), head.score_logits.value(), head.frames, head.height, head.width);
}

}  // namespace rvos
