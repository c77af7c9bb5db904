#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "rvos/model.hpp"

namespace rvos {

/// Inclusive pixel box.
struct BBox {
  int row_min = 0;
  int col_min = 0;
  int row_max = 0;
  int col_max = 0;

  bool contains(int r, int c) const { return r >= row_min && r <= row_max && c >= col_min && c <= col_max; }
  bool operator==(const BBox&) const = default;
};

using Point = std::pair<int, int>;  // (row, col)

struct PromptPoints {
  std::vector<Point> positives;
  std::vector<Point> negatives;
  BBox bbox;
};

inline constexpr int kPositivePoints = 10;
inline constexpr int kNegativePoints = 5;

/// Tight box over the foreground. Throws EmptyMaskError for an empty mask.
BBox bbox_from_mask(const Mask& mask);

/// Uniform sampling without replacement: min(10, |fg|) positives from the
/// foreground and min(5, |bbox \ fg|) negatives from the box background.
PromptPoints sample_prompt_points(const Mask& mask, std::uint64_t seed, int num_positive = kPositivePoints,
                                  int num_negative = kNegativePoints);

/// Region growing inside the box from the positive points over 4-connected
/// pixels whose color lies within `threshold` (Euclidean RGB) of the nearest
/// positive-point color. Positives whose color is within `threshold` of a
/// negative point do not count as color references unless all of them do.
/// Negative points and their 4-neighbours are barred, and a grown pixel must
/// be closer to a positive color than to every negative color. Output always
/// contains the positives.
Mask stub_refine(const Image& image, const PromptPoints& prompts, double threshold = 0.25);

enum class RefinerKind { none, identity, stub, external };
enum class OnError { keep_original, abort };

std::string to_string(RefinerKind k);
RefinerKind parse_refiner(const std::string& s);
OnError parse_on_error(const std::string& s);

struct RefinerConfig {
  RefinerKind kind = RefinerKind::none;
  double threshold = 0.25;              // stub color threshold
  std::filesystem::path exchange_dir;   // external: request directories are created here
  std::string command;                  // external: run per request, "{dir}" replaced by the request dir
  OnError on_error = OnError::keep_original;
  std::uint64_t seed = 0;               // prompt sampling
};

class Refiner {
 public:
  virtual ~Refiner() = default;
  /// Refined mask for one frame. `frame` is the position within the clip.
  virtual Mask refine(const Image& image, const Mask& current, const PromptPoints& prompts, int frame) = 0;
};

class IdentityRefiner : public Refiner {
 public:
  Mask refine(const Image&, const Mask& current, const PromptPoints&, int) override { return current; }
};

class StubRefiner : public Refiner {
 public:
  explicit StubRefiner(double threshold) : threshold_(threshold) {}
  Mask refine(const Image& image, const Mask&, const PromptPoints& prompts, int) override {
    return stub_refine(image, prompts, threshold_);
  }

 private:
  double threshold_;
};

/// File-exchange adapter. Each request directory holds `frame.png`, `mask.png`
/// and `prompts.json`; the response is `refined.png` (0/255) in the same
/// directory. Requests are serialized per instance.
class ExternalRefiner : public Refiner {
 public:
  ExternalRefiner(std::filesystem::path exchange_dir, std::string command)
      : dir_(std::move(exchange_dir)), command_(std::move(command)) {}
  Mask refine(const Image& image, const Mask& current, const PromptPoints& prompts, int frame) override;

  /// Clip key used to name request directories (`<key>_<frame>`).
  void set_request_key(std::string key) { key_ = std::move(key); }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::string key_ = "clip";
  std::mutex mutex_;
};

/// Null for RefinerKind::none.
std::unique_ptr<Refiner> make_refiner(const RefinerConfig& config);

void write_prompts_json(const std::filesystem::path& path, const PromptPoints& prompts);

/// Refines every frame of `output.binary_masks` with prompts drawn from that
/// frame's mask. Empty frames pass through. Refiner failures follow `on_error`.
SegmentationOutput refine_masks(const SegmentationOutput& output, const VideoClip& clip, Refiner& refiner,
                                std::uint64_t seed, OnError on_error = OnError::keep_original);

}  // namespace rvos
