#include "rvos/refine.hpp"

#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "rvos/errors.hpp"
#include "rvos/image_io.hpp"
#include "rvos/rng.hpp"

namespace rvos {

namespace fs = std::filesystem;

BBox bbox_from_mask(const Mask& mask) {
  BBox box{static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), -1, -1};
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        box.row_min = std::min(box.row_min, static_cast<int>(r));
        box.col_min = std::min(box.col_min, static_cast<int>(c));
        box.row_max = std::max(box.row_max, static_cast<int>(r));
        box.col_max = std::max(box.col_max, static_cast<int>(c));
      }
  if (box.row_max < 0) throw EmptyMaskError("bbox_from_mask: mask has no foreground");
  return box;
}

namespace {

/// Partial Fisher-Yates: `count` distinct elements, uniformly.
std::vector<Point> draw(std::vector<Point> pool, int count, Rng& rng) {
  const std::size_t k = std::min(pool.size(), static_cast<std::size_t>(std::max(count, 0)));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

PromptPoints sample_prompt_points(const Mask& mask, std::uint64_t seed, int num_positive, int num_negative) {
  PromptPoints p;
  p.bbox = bbox_from_mask(mask);
  std::vector<Point> fg, bg;
  for (int r = p.bbox.row_min; r <= p.bbox.row_max; ++r)
    for (int c = p.bbox.col_min; c <= p.bbox.col_max; ++c) (mask(r, c) ? fg : bg).emplace_back(r, c);
  Rng rng(seed);
  p.positives = draw(std::move(fg), num_positive, rng);
  p.negatives = draw(std::move(bg), num_negative, rng);
  return p;
}

Mask stub_refine(const Image& image, const PromptPoints& prompts, double threshold) {
  const int H = image.height, W = image.width;
  Mask out = Mask::Zero(H, W);
  if (prompts.positives.empty()) return out;
  const BBox& box = prompts.bbox;

  std::vector<Eigen::RowVector3d> neg_colors;
  for (const auto& [r, c] : prompts.negatives) neg_colors.push_back(image.at(r, c));
  auto nearest = [](const Eigen::RowVector3d& px, const std::vector<Eigen::RowVector3d>& colors) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& col : colors) best = std::min(best, (px - col).norm());
    return best;
  };
  // Positives whose color matches a negative are left out of the color model.
  std::vector<Eigen::RowVector3d> pos_colors;
  for (const auto& [r, c] : prompts.positives)
    if (nearest(image.at(r, c), neg_colors) >= threshold) pos_colors.push_back(image.at(r, c));
  if (pos_colors.empty())
    for (const auto& [r, c] : prompts.positives) pos_colors.push_back(image.at(r, c));

  Mask barred = Mask::Zero(H, W);
  const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
  for (const auto& [r, c] : prompts.negatives) {
    barred(r, c) = 1;
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (rr >= 0 && rr < H && cc >= 0 && cc < W) barred(rr, cc) = 1;
    }
  }

  auto admissible = [&](int r, int c) {
    const Eigen::RowVector3d px = image.at(r, c);
    const double d_pos = nearest(px, pos_colors);
    return d_pos < threshold && d_pos < nearest(px, neg_colors);
  };

  std::deque<Point> queue;
  for (const auto& p : prompts.positives) {
    if (!out(p.first, p.second)) queue.push_back(p);
    out(p.first, p.second) = 1;
  }
  while (!queue.empty()) {
    const auto [r, c] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (!box.contains(rr, cc) || out(rr, cc) || barred(rr, cc) || !admissible(rr, cc)) continue;
      out(rr, cc) = 1;
      queue.emplace_back(rr, cc);
    }
  }
  return out;
}

std::string to_string(RefinerKind k) {
  switch (k) {
    case RefinerKind::none: return "none";
    case RefinerKind::identity: return "identity";
    case RefinerKind::stub: return "stub";
    case RefinerKind::external: return "external";
  }
  return "none";
}

RefinerKind parse_refiner(const std::string& s) {
  if (s == "none") return RefinerKind::none;
  if (s == "identity") return RefinerKind::identity;
  if (s == "stub") return RefinerKind::stub;
  if (s == "external") return RefinerKind::external;
  throw ValidationError("refiner: unknown value '" + s + "'");
}

OnError parse_on_error(const std::string& s) {
  if (s == "keep_original") return OnError::keep_original;
  if (s == "abort") return OnError::abort;
  throw ValidationError("refiner.on_error: unknown value '" + s + "'");
}

void write_prompts_json(const fs::path& path, const PromptPoints& prompts) {
  nlohmann::json j;
  auto points = [](const std::vector<Point>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [r, c] : pts) arr.push_back({r, c});
    return arr;
  };
  j["positives"] = points(prompts.positives);
  j["negatives"] = points(prompts.negatives);
  j["bbox"] = {prompts.bbox.row_min, prompts.bbox.col_min, prompts.bbox.row_max, prompts.bbox.col_max};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Mask ExternalRefiner::refine(const Image& image, const Mask& current, const PromptPoints& prompts, int frame) {
  std::lock_guard<std::mutex> lock(mutex_);
  const fs::path req = dir_ / (key_ + "_" + std::to_string(frame));
  try {
    fs::create_directories(req);
    write_rgb_png(req / "frame.png", image);
    write_mask_png(req / "mask.png", current);
    write_prompts_json(req / "prompts.json", prompts);
    if (!command_.empty()) {
      fs::remove(req / "refined.png");
      std::string cmd = command_;
      for (std::size_t at = cmd.find("{dir}"); at != std::string::npos; at = cmd.find("{dir}", at))
        cmd.replace(at, 5, req.string());
      if (std::system(cmd.c_str()) != 0) throw RefinementError("external refiner command failed", frame);
    }
    if (!fs::exists(req / "refined.png")) throw RefinementError("no refined.png in " + req.string(), frame);
    Mask refined = read_mask_png(req / "refined.png");
    if (refined.rows() != current.rows() || refined.cols() != current.cols())
      throw RefinementError("refined.png has the wrong size", frame);
    return refined;
  } catch (const RefinementError&) {
    throw;
  } catch (const std::exception& e) {
    throw RefinementError(std::string("external refiner I/O: ") + e.what(), frame);
  }
}

std::unique_ptr<Refiner> make_refiner(const RefinerConfig& config) {
  switch (config.kind) {
    case RefinerKind::none: return nullptr;
    case RefinerKind::identity: return std::make_unique<IdentityRefiner>();
    case RefinerKind::stub: return std::make_unique<StubRefiner>(config.threshold);
    case RefinerKind::external: return std::make_unique<ExternalRefiner>(config.exchange_dir, config.command);
  }
  return nullptr;
}

SegmentationOutput refine_masks(const SegmentationOutput& output, const VideoClip& clip, Refiner& refiner,
                                std::uint64_t seed, OnError on_error) {
  if (static_cast<int>(output.binary_masks.size()) != clip.num_frames())
    throw DomainError("refine_masks: output and clip frame counts differ");
  SegmentationOutput out = output;
  for (int t = 0; t < clip.num_frames(); ++t) {
    const Mask& current = output.binary_masks[static_cast<std::size_t>(t)];
    if (!(current > 0).any()) continue;
    const PromptPoints prompts = sample_prompt_points(current, mix_seed(seed, static_cast<std::uint64_t>(t)));
    try {
      out.binary_masks[static_cast<std::size_t>(t)] =
          refiner.refine(clip.frames[static_cast<std::size_t>(t)], current, prompts, t);
    } catch (const RefinementError&) {
      if (on_error == OnError::abort) throw;
    }
  }
  return out;
}

}  // namespace rvos
