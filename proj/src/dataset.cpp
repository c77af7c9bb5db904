#include "rvos/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rvos/errors.hpp"
#include "rvos/image_io.hpp"
#include "rvos/rle.hpp"

namespace rvos {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ValidationError("split: unknown value '" + s + "'");
}

VideoClip VideoEntry::clip(const std::vector<int>& indices) const {
  VideoClip c;
  c.video_id = video_id;
  c.source_length = source_length;
  c.frame_indices = indices;
  for (int i : indices) {
    if (i < 0 || i >= source_length)
      throw DomainError("video " + video_id + ": frame index " + std::to_string(i) + " out of range");
    c.frames.push_back(frames[static_cast<std::size_t>(i)]);
  }
  c.validate();
  return c;
}

std::map<int, MaskTrack> VideoEntry::tracks_at(const std::vector<int>& indices) const {
  std::map<int, MaskTrack> out;
  for (const auto& [id, track] : objects) {
    MaskTrack t;
    for (int i : indices) t.push_back(track.at(static_cast<std::size_t>(i)));
    out.emplace(id, std::move(t));
  }
  return out;
}

const VideoEntry& DatasetManifest::video(const std::string& id) const {
  auto it = videos.find(id);
  if (it == videos.end()) throw ReferentialIntegrityError("unknown video_id '" + id + "'");
  return it->second;
}

const ExpressionSample& DatasetManifest::expression(const std::string& expression_id) const {
  for (const auto& e : expressions)
    if (e.expression_id == expression_id) return e;
  throw ReferentialIntegrityError("unknown expression_id '" + expression_id + "'");
}

std::vector<MaskTrack> DatasetManifest::target_tracks(const ExpressionSample& e,
                                                      const std::vector<int>& indices) const {
  const VideoEntry& v = video(e.video_id);
  std::vector<MaskTrack> out;
  for (int id : e.target_object_ids) {
    auto it = v.objects.find(id);
    if (it == v.objects.end())
      throw ReferentialIntegrityError("expression " + e.expression_id + ": unknown object " + std::to_string(id));
    MaskTrack t;
    for (int i : indices) t.push_back(it->second.at(static_cast<std::size_t>(i)));
    out.push_back(std::move(t));
  }
  return out;
}

MaskTrack DatasetManifest::target_union(const ExpressionSample& e, const std::vector<int>& indices) const {
  const VideoEntry& v = video(e.video_id);
  MaskTrack out;
  for (std::size_t t = 0; t < indices.size(); ++t) out.push_back(Mask::Zero(v.height, v.width));
  for (const auto& track : target_tracks(e, indices))
    for (std::size_t t = 0; t < indices.size(); ++t) out[t] = mask_union(out[t], track[t]);
  return out;
}

namespace {

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": key '" + key + "' has the wrong type");
  }
}

MaskTrack load_track(const json& obj, const VideoEntry& v, const fs::path& root, const std::string& where) {
  MaskTrack track;
  if (obj.contains("rle")) {
    const auto rles = get_as<std::vector<std::string>>(obj, "rle", where);
    for (std::size_t i = 0; i < rles.size(); ++i) {
      try {
        track.push_back(decode_mask(rles[i], v.height, v.width));
      } catch (const DecodeError& e) {
        throw ValidationError(where + ".rle[" + std::to_string(i) + "]: " + e.what());
      }
    }
  } else if (obj.contains("mask_paths")) {
    for (const auto& rel : get_as<std::vector<std::string>>(obj, "mask_paths", where)) {
      const fs::path p = root / rel;
      if (!fs::exists(p)) throw LoadError("missing mask file: " + p.string());
      Mask m = read_mask_png(p);
      if (m.rows() != v.height || m.cols() != v.width)
        throw ValidationError(where + ": mask " + p.string() + " has the wrong size");
      track.push_back(std::move(m));
    }
  } else {
    throw ValidationError(where + ": missing key 'rle' or 'mask_paths'");
  }
  return track;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  if (!fs::exists(file)) throw LoadError("manifest not found: " + file.string());
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open manifest: " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + file.string() + ": invalid JSON: " + e.what());
  }

  DatasetManifest m;
  m.root = file.parent_path();
  m.split = parse_split(get_as<std::string>(doc, "split", "manifest"));

  const json& videos = require_key(doc, "videos", "manifest");
  if (!videos.is_object()) throw ValidationError("manifest: key 'videos' must be an object");
  for (const auto& [vid, vj] : videos.items()) {
    const std::string where = "videos." + vid;
    VideoEntry v;
    v.video_id = vid;
    v.source_length = get_as<int>(vj, "source_length", where);
    v.height = get_as<int>(vj, "height", where);
    v.width = get_as<int>(vj, "width", where);
    if (v.source_length < 1 || v.height < 1 || v.width < 1)
      throw ValidationError(where + ": source_length/height/width must be positive");
    v.frame_paths = get_as<std::vector<std::string>>(vj, "frame_paths", where);
    if (static_cast<int>(v.frame_paths.size()) != v.source_length)
      throw ValidationError(where + ".frame_paths: expected " + std::to_string(v.source_length) + " entries");
    for (const auto& rel : v.frame_paths) {
      const fs::path p = m.root / rel;
      if (!fs::exists(p)) throw LoadError("missing frame file: " + p.string());
      Image img = read_rgb_png(p);
      if (img.height != v.height || img.width != v.width)
        throw ValidationError(where + ": frame " + p.string() + " has the wrong size");
      v.frames.push_back(std::move(img));
    }
    const json& objects = require_key(vj, "objects", where);
    if (!objects.is_object()) throw ValidationError(where + ": key 'objects' must be an object");
    for (const auto& [oid, oj] : objects.items()) {
      const std::string owhere = where + ".objects." + oid;
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(oid, &used);
        if (used != oid.size()) throw std::invalid_argument(oid);
      } catch (const std::exception&) {
        throw ValidationError(owhere + ": object id must be an integer");
      }
      MaskTrack track = load_track(oj, v, m.root, owhere);
      if (static_cast<int>(track.size()) != v.source_length)
        throw ReferentialIntegrityError(owhere + ": mask track length " + std::to_string(track.size()) +
                                        " != source_length " + std::to_string(v.source_length));
      v.objects.emplace(id, std::move(track));
    }
    m.videos.emplace(vid, std::move(v));
  }

  const json& exprs = require_key(doc, "expressions", "manifest");
  if (!exprs.is_array()) throw ValidationError("manifest: key 'expressions' must be an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    const std::string where = "expressions[" + std::to_string(i) + "]";
    ExpressionSample e;
    e.expression_id = get_as<std::string>(exprs[i], "expression_id", where);
    e.video_id = get_as<std::string>(exprs[i], "video_id", where);
    e.expression = get_as<std::string>(exprs[i], "expression", where);
    e.target_object_ids = get_as<std::vector<int>>(exprs[i], "target_object_ids", where);
    std::sort(e.target_object_ids.begin(), e.target_object_ids.end());
    e.target_object_ids.erase(std::unique(e.target_object_ids.begin(), e.target_object_ids.end()),
                              e.target_object_ids.end());
    if (!seen.insert(e.expression_id).second)
      throw ValidationError(where + ": duplicate expression_id '" + e.expression_id + "'");
    if (e.target_object_ids.empty()) throw ValidationError(where + ".target_object_ids: empty");
    auto vit = m.videos.find(e.video_id);
    if (vit == m.videos.end())
      throw ReferentialIntegrityError(where + ": unknown video_id '" + e.video_id + "'");
    for (int id : e.target_object_ids)
      if (!vit->second.objects.count(id))
        throw ReferentialIntegrityError(where + ": unknown object_id " + std::to_string(id) + " in video " +
                                        e.video_id);
    m.expressions.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, MaskStorage storage) {
  json doc;
  doc["split"] = to_string(manifest.split);
  json videos = json::object();
  for (const auto& [vid, v] : manifest.videos) {
    json vj;
    vj["source_length"] = v.source_length;
    vj["height"] = v.height;
    vj["width"] = v.width;
    vj["frame_paths"] = v.frame_paths;
    json objects = json::object();
    for (const auto& [id, track] : v.objects) {
      json oj;
      if (storage == MaskStorage::rle) {
        std::vector<std::string> rles;
        for (const auto& mask : track) rles.push_back(encode_mask(mask));
        oj["rle"] = rles;
      } else {
        std::vector<std::string> paths;
        const fs::path dir = fs::path(vid) / "masks" / std::to_string(id);
        fs::create_directories(manifest.root / dir);
        for (std::size_t t = 0; t < track.size(); ++t) {
          char name[32];
          std::snprintf(name, sizeof(name), "%05zu.png", t);
          write_mask_png(manifest.root / dir / name, track[t]);
          paths.push_back((dir / name).generic_string());
        }
        oj["mask_paths"] = paths;
      }
      objects[std::to_string(id)] = oj;
    }
    vj["objects"] = objects;
    videos[vid] = vj;
  }
  doc["videos"] = videos;
  json exprs = json::array();
  for (const auto& e : manifest.expressions) {
    exprs.push_back({{"expression_id", e.expression_id},
                     {"video_id", e.video_id},
                     {"expression", e.expression},
                     {"target_object_ids", e.target_object_ids}});
  }
  doc["expressions"] = exprs;
  fs::create_directories(manifest.root);
  std::ofstream out(manifest.root / "manifest.json", std::ios::trunc);
  if (!out) throw LoadError("cannot write " + (manifest.root / "manifest.json").string());
  out << doc.dump(2) << '\n';
}

}  // namespace rvos
