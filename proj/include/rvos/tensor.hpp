#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rvos {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<double>;

/// H×W binary mask, row-major, values exactly 0 or 1.
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// T masks of one object, aligned with a clip's frames.
using MaskTrack = std::vector<Mask>;

/// H×W RGB frame; pixels stored as (H*W)×3 row-major, intensities in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>::Zero(h * w, 3)) {}

  auto at(int r, int c) { return pixels.row(r * width + c); }
  auto at(int r, int c) const { return pixels.row(r * width + c); }
};

/// T sampled frames of one source video.
struct VideoClip {
  std::string video_id;
  std::vector<Image> frames;
  std::vector<int> frame_indices;
  int source_length = 0;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  /// Throws DomainError when the clip breaks its shape/range invariants.
  void validate() const;
};

bool is_binary(const Mask& m);

/// Pixel-wise OR; shapes must agree.
Mask mask_union(const Mask& a, const Mask& b);

/// Stacks T frames into a (T*H*W)×3 matrix (frame-major, then row-major pixels).
Matrix stack_frames(const std::vector<Image>& frames);

/// Stacks T masks into a (T*H*W)×3 matrix with the mask value replicated per channel.
Matrix stack_masks(const MaskTrack& masks);

/// Stacks T masks applied to the frames' RGB values (mask * rgb).
Matrix stack_masked_rgb(const MaskTrack& masks, const std::vector<Image>& frames);

}  // namespace rvos
