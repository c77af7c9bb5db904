#include "rvos/tensor.hpp"

#include "rvos/errors.hpp"

namespace rvos {

void VideoClip::validate() const {
  if (frames.empty()) throw DomainError("clip " + video_id + ": no frames");
  if (frames.size() != frame_indices.size())
    throw DomainError("clip " + video_id + ": frame/index count mismatch");
  const int h = frames.front().height, w = frames.front().width;
  if (h < 1 || w < 1) throw DomainError("clip " + video_id + ": empty frame");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Image& f = frames[i];
    if (f.height != h || f.width != w || f.pixels.rows() != h * w)
      throw DomainError("clip " + video_id + ": inconsistent frame size");
    if (!f.pixels.allFinite() || f.pixels.minCoeff() < 0.0 || f.pixels.maxCoeff() > 1.0)
      throw DomainError("clip " + video_id + ": pixel values outside [0,1]");
    const int idx = frame_indices[i];
    if (idx < 0 || (source_length > 0 && idx >= source_length))
      throw DomainError("clip " + video_id + ": frame index out of range");
    if (i > 0 && idx < frame_indices[i - 1])
      throw DomainError("clip " + video_id + ": frame indices decrease");
  }
}

bool is_binary(const Mask& m) {
  return (m <= 1).all();
}

Mask mask_union(const Mask& a, const Mask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("mask_union: shape mismatch");
  return a.max(b);
}

Matrix stack_frames(const std::vector<Image>& frames) {
  if (frames.empty()) return Matrix(0, 3);
  const Eigen::Index hw = frames.front().pixels.rows();
  Matrix out(hw * static_cast<Eigen::Index>(frames.size()), 3);
  for (std::size_t t = 0; t < frames.size(); ++t)
    out.middleRows(static_cast<Eigen::Index>(t) * hw, hw) = frames[t].pixels;
  return out;
}

Matrix stack_masks(const MaskTrack& masks) {
  if (masks.empty()) return Matrix(0, 3);
  const Eigen::Index hw = masks.front().size();
  Matrix out(hw * static_cast<Eigen::Index>(masks.size()), 3);
  for (std::size_t t = 0; t < masks.size(); ++t) {
    if (masks[t].size() != hw) throw DomainError("stack_masks: inconsistent mask sizes");
    for (Eigen::Index i = 0; i < hw; ++i)
      out.row(static_cast<Eigen::Index>(t) * hw + i).setConstant(masks[t].data()[i] ? 1.0 : 0.0);
  }
  return out;
}

Matrix stack_masked_rgb(const MaskTrack& masks, const std::vector<Image>& frames) {
  if (masks.size() != frames.size()) throw DomainError("stack_masked_rgb: frame count mismatch");
  Matrix out = stack_masks(masks);
  const Matrix rgb = stack_frames(frames);
  if (rgb.rows() != out.rows()) throw DomainError("stack_masked_rgb: frame size mismatch");
  return out.cwiseProduct(rgb);
}

}  // namespace rvos
