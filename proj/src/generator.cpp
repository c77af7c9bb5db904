#include "rvos/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "rvos/errors.hpp"
#include "rvos/image_io.hpp"
#include "rvos/rng.hpp"

namespace rvos {

namespace fs = std::filesystem;

std::array<std::uint8_t, 3> palette_color(const std::string& name) {
  static const std::map<std::string, std::array<std::uint8_t, 3>> palette = {
      {"red", {230, 25, 25}},     {"green", {25, 200, 25}},    {"blue", {25, 50, 230}},
      {"yellow", {230, 230, 25}}, {"magenta", {220, 30, 220}}, {"cyan", {30, 210, 210}},
  };
  auto it = palette.find(name);
  if (it == palette.end()) throw ValidationError("unknown color '" + name + "'");
  return it->second;
}

namespace {

struct ObjectSpec {
  int id = 0;
  std::string shape;
  std::string color;
  std::string motion;
  int size = 0;
  std::vector<std::pair<int, int>> positions;  // top-left (row, col) per frame
};

Mask rasterize(const std::string& shape, int size, int top, int left, int h, int w) {
  Mask m = Mask::Zero(h, w);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      bool in = false;
      if (shape == "square") {
        in = true;
      } else if (shape == "circle") {
        const double dr = i - c, dc = j - c;
        in = dr * dr + dc * dc <= (size / 2.0) * (size / 2.0);
      } else if (shape == "triangle") {
        in = std::abs(j - c) <= (i + 1) / 2.0;
      } else {
        throw ValidationError("unknown shape '" + shape + "'");
      }
      const int r = top + i, col = left + j;
      if (in && r >= 0 && r < h && col >= 0 && col < w) m(r, col) = 1;
    }
  return m;
}

std::vector<std::pair<int, int>> motion_path(const std::string& motion, int size, int frames, int h, int w,
                                             Rng& rng) {
  std::vector<std::pair<int, int>> path;
  const int room_r = h - size, room_c = w - size;
  const auto travel_for = [&](int room) {
    return std::clamp(static_cast<int>(std::lround(1.5 * (frames - 1))), 1, room);
  };
  auto lerp = [&](int start, int travel, int f, int sign) {
    return start + sign * static_cast<int>(std::lround(travel * static_cast<double>(f) / (frames - 1)));
  };
  if (motion == "left" || motion == "right") {
    const int travel = travel_for(room_c);
    const int row = static_cast<int>(rng.range(0, room_r + 1));
    const int start = motion == "left" ? static_cast<int>(rng.range(travel, room_c + 1))
                                       : static_cast<int>(rng.range(0, room_c - travel + 1));
    for (int f = 0; f < frames; ++f) path.emplace_back(row, lerp(start, travel, f, motion == "left" ? -1 : 1));
  } else if (motion == "up" || motion == "down") {
    const int travel = travel_for(room_r);
    const int col = static_cast<int>(rng.range(0, room_c + 1));
    const int start = motion == "up" ? static_cast<int>(rng.range(travel, room_r + 1))
                                     : static_cast<int>(rng.range(0, room_r - travel + 1));
    for (int f = 0; f < frames; ++f) path.emplace_back(lerp(start, travel, f, motion == "up" ? -1 : 1), col);
  } else if (motion == "still") {
    const int row = static_cast<int>(rng.range(0, room_r + 1));
    const int col = static_cast<int>(rng.range(0, room_c + 1));
    path.assign(static_cast<std::size_t>(frames), {row, col});
  } else if (motion == "circle") {
    const int radius = std::max(1, std::min(3, std::min(room_r, room_c) / 2));
    const int cr = static_cast<int>(rng.range(radius, room_r - radius + 1));
    const int cc = static_cast<int>(rng.range(radius, room_c - radius + 1));
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int f = 0; f < frames; ++f) {
      const double a = phase + 2.0 * M_PI * f / frames;
      path.emplace_back(cr + static_cast<int>(std::lround(radius * std::sin(a))),
                        cc + static_cast<int>(std::lround(radius * std::cos(a))));
    }
  } else {
    throw ValidationError("unknown motion '" + motion + "'");
  }
  return path;
}

std::string motion_phrase(const std::string& motion, bool plural) {
  if (motion == "still") return plural ? "that stay still" : "that stays still";
  if (motion == "circle") return "moving in a circle";
  return "moving " + motion;
}

void validate(const GeneratorConfig& c) {
  if (c.n_videos < 1) throw ValidationError("generator: n_videos must be >= 1");
  if (c.frames < 2) throw ValidationError("generator: frames must be >= 2");
  if (c.height < 1 || c.width < 1) throw ValidationError("generator: canvas must be positive");
  if (c.shapes.empty() || c.colors.empty() || c.motions.empty())
    throw ValidationError("generator: shape, color and motion vocabularies must be non-empty");
  if (c.objects_per_video < 1) throw ValidationError("generator: objects_per_video must be >= 1");
  if (c.objects_per_video > static_cast<int>(c.colors.size()))
    throw ValidationError("generator: more objects per video than colors");
  if (c.shape_min < 2 || c.shape_max < c.shape_min) throw ValidationError("generator: bad shape size range");
  for (const auto& col : c.colors) palette_color(col);
  if (std::min(c.height, c.width) < c.shape_max + 4)
    throw GenerationError("generator: canvas " + std::to_string(c.height) + "x" + std::to_string(c.width) +
                          " too small for shapes up to " + std::to_string(c.shape_max) + " px");
}

}  // namespace

DatasetManifest generate_synthetic_dataset(const GeneratorConfig& config, std::uint64_t seed,
                                           const fs::path& out_dir) {
  validate(config);
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.split = config.split;
  const int H = config.height, W = config.width, F = config.frames;

  for (int vi = 0; vi < config.n_videos; ++vi) {
    char vid_buf[32];
    std::snprintf(vid_buf, sizeof(vid_buf), "vid%03d", vi);
    const std::string vid = vid_buf;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(vi)));

    std::vector<ObjectSpec> objects;
    std::vector<MaskTrack> visible;
    for (int attempt = 0; attempt < 200; ++attempt) {
      objects.clear();
      std::vector<std::string> colors = config.colors;
      for (int k = 0; k < config.objects_per_video; ++k) {
        ObjectSpec o;
        o.id = k + 1;
        const auto ci = rng.index(colors.size());
        o.color = colors[ci];
        colors.erase(colors.begin() + static_cast<std::ptrdiff_t>(ci));
        o.shape = config.shapes[rng.index(config.shapes.size())];
        // The first video always carries a shared motion so the dataset has a
        // multi-target expression.
        if (vi == 0 && k == 1)
          o.motion = objects[0].motion;
        else
          o.motion = config.motions[rng.index(config.motions.size())];
        o.size = static_cast<int>(rng.range(config.shape_min, config.shape_max + 1));
        o.positions = motion_path(o.motion, o.size, F, H, W, rng);
        objects.push_back(std::move(o));
      }
      // Later objects occlude earlier ones.
      visible.assign(objects.size(), MaskTrack{});
      bool ok = true;
      for (int f = 0; f < F; ++f) {
        std::vector<Mask> full;
        for (const auto& o : objects)
          full.push_back(rasterize(o.shape, o.size, o.positions[f].first, o.positions[f].second, H, W));
        for (std::size_t k = 0; k < objects.size(); ++k) {
          Mask vis = full[k];
          for (std::size_t j = k + 1; j < objects.size(); ++j) vis = vis * (std::uint8_t(1) - full[j]);
          const int area = full[k].cast<int>().sum();
          if (vis.cast<int>().sum() * 2 < area) ok = false;
          visible[k].push_back(std::move(vis));
        }
      }
      if (ok) break;
    }
    for (std::size_t k = 0; k < objects.size(); ++k) {
      bool any = false;
      for (const auto& m : visible[k]) any = any || (m > 0).any();
      if (!any) throw GenerationError("generator: object " + std::to_string(objects[k].id) + " of " + vid +
                                      " is never visible");
    }

    VideoEntry v;
    v.video_id = vid;
    v.source_length = F;
    v.height = H;
    v.width = W;
    fs::create_directories(out_dir / vid / "frames");
    for (int f = 0; f < F; ++f) {
      Image img(H, W);
      const auto bg = kBackground;
      for (Eigen::Index i = 0; i < img.pixels.rows(); ++i)
        img.pixels.row(i) << bg[0] / 255.0, bg[1] / 255.0, bg[2] / 255.0;
      for (std::size_t k = 0; k < objects.size(); ++k) {
        const auto rgb = palette_color(objects[k].color);
        const Mask& m = visible[k][static_cast<std::size_t>(f)];
        for (Eigen::Index i = 0; i < m.size(); ++i)
          if (m.data()[i]) img.pixels.row(i) << rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0;
      }
      char name[32];
      std::snprintf(name, sizeof(name), "%05d.png", f);
      const fs::path rel = fs::path(vid) / "frames" / name;
      write_rgb_png(out_dir / rel, img);
      v.frame_paths.push_back(rel.generic_string());
      v.frames.push_back(std::move(img));
    }
    for (std::size_t k = 0; k < objects.size(); ++k) v.objects.emplace(objects[k].id, visible[k]);

    int ei = 0;
    auto add_expression = [&](std::string text, std::vector<int> targets) {
      ExpressionSample e;
      e.expression_id = vid + "_e" + std::to_string(ei++);
      e.video_id = vid;
      e.expression = std::move(text);
      std::sort(targets.begin(), targets.end());
      e.target_object_ids = std::move(targets);
      manifest.expressions.push_back(std::move(e));
    };
    for (const auto& o : objects)
      add_expression("the " + o.color + " " + o.shape + " " + motion_phrase(o.motion, false), {o.id});
    for (const auto& motion : config.motions) {
      std::vector<int> group;
      std::map<std::string, std::vector<int>> by_shape;
      for (const auto& o : objects)
        if (o.motion == motion) {
          group.push_back(o.id);
          by_shape[o.shape].push_back(o.id);
        }
      if (group.size() < 2) continue;
      add_expression("the objects " + motion_phrase(motion, true), group);
      for (const auto& [shape, ids] : by_shape)
        if (ids.size() >= 2)
          add_expression("the " + shape + "s " + motion_phrase(motion, true), ids);
    }
    manifest.videos.emplace(vid, std::move(v));
  }
  save_manifest(manifest, config.mask_storage);
  return manifest;
}

}  // namespace rvos
