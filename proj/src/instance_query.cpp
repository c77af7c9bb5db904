#include "rvos/instance_query.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rvos/errors.hpp"
#include "rvos/morphology.hpp"
#include "rvos/nn.hpp"
#include "rvos/rle.hpp"

namespace rvos {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::oracle: return "oracle";
    case ProviderKind::perturbed: return "perturbed";
    case ProviderKind::file: return "file";
  }
  return "oracle";
}

ProviderKind parse_provider(const std::string& s) {
  if (s == "oracle") return ProviderKind::oracle;
  if (s == "perturbed" || s == "synthetic-perturbed") return ProviderKind::perturbed;
  if (s == "file") return ProviderKind::file;
  throw ValidationError("instance_init.provider: unknown value '" + s + "'");
}

namespace {

double mean_iou(const MaskTrack& a, const MaskTrack& b) {
  double total = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const int inter = (a[t] * b[t]).cast<int>().sum();
    const int uni = a[t].max(b[t]).cast<int>().sum();
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  }
  return a.empty() ? 1.0 : total / static_cast<double>(a.size());
}

InstanceMaskSet from_file(const VideoClip& clip, const InstanceInitConfig& config) {
  const fs::path path = config.provider_dir / (clip.video_id + ".json");
  std::ifstream in(path);
  if (!in) throw LoadError("instance file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("instance file " + path.string() + ": " + e.what());
  }
  InstanceMaskSet set;
  try {
    const int h = doc.at("height").get<int>(), w = doc.at("width").get<int>();
    if (h != clip.height() || w != clip.width())
      throw AlignmentError("instance file " + path.string() + ": masks are " + std::to_string(h) + "x" +
                           std::to_string(w) + ", clip is " + std::to_string(clip.height()) + "x" +
                           std::to_string(clip.width()));
    for (const auto& inst : doc.at("instances")) {
      const auto rles = inst.at("rle").get<std::vector<std::string>>();
      MaskTrack track;
      for (int idx : clip.frame_indices) {
        if (idx >= static_cast<int>(rles.size()))
          throw AlignmentError("instance file " + path.string() + ": no mask for frame " + std::to_string(idx));
        try {
          track.push_back(decode_mask(rles[static_cast<std::size_t>(idx)], h, w));
        } catch (const DecodeError& e) {
          throw AlignmentError("instance file " + path.string() + ": " + e.what());
        }
      }
      set.masks.push_back(std::move(track));
      set.instance_ids.push_back(inst.at("id").get<int>());
      set.scores.push_back(inst.value("score", 1.0));
    }
  } catch (const json::exception& e) {
    throw LoadError("instance file " + path.string() + ": " + e.what());
  }
  return set;
}

}  // namespace

InstanceMaskSet provide_instance_masks(const VideoClip& clip, const std::map<int, MaskTrack>& tracks,
                                       const InstanceInitConfig& config) {
  InstanceMaskSet raw;
  if (config.provider == ProviderKind::file) {
    raw = from_file(clip, config);
  } else {
    for (const auto& [id, track] : tracks) {
      if (static_cast<int>(track.size()) != clip.num_frames())
        throw AlignmentError("instance track " + std::to_string(id) + " has " + std::to_string(track.size()) +
                             " frames, clip has " + std::to_string(clip.num_frames()));
      MaskTrack masks = track;
      double score = 1.0;
      if (config.provider == ProviderKind::perturbed) {
        Rng rng(mix_seed(mix_seed(config.perturb_seed, static_cast<std::uint64_t>(id)),
                         static_cast<std::uint64_t>(clip.frame_indices.empty() ? 0 : clip.frame_indices.front())));
        for (auto& m : masks) {
          m = config.perturb_radius >= 0 ? dilate(m, config.perturb_radius) : erode(m, -config.perturb_radius);
          if (config.perturb_dropout > 0.0 && rng.bernoulli(config.perturb_dropout)) m.setZero();
        }
        score = mean_iou(masks, track);
      }
      raw.masks.push_back(std::move(masks));
      raw.instance_ids.push_back(id);
      raw.scores.push_back(score);
    }
  }

  std::vector<std::size_t> order(raw.masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (raw.scores[a] != raw.scores[b]) return raw.scores[a] > raw.scores[b];
    return raw.instance_ids[a] < raw.instance_ids[b];
  });
  InstanceMaskSet out;
  for (std::size_t i : order) {
    if (raw.scores[i] < config.score_threshold) continue;
    if (out.size() >= config.k_max) break;
    out.masks.push_back(std::move(raw.masks[i]));
    out.instance_ids.push_back(raw.instance_ids[i]);
    out.scores.push_back(raw.scores[i]);
  }
  return out;
}

void write_instance_file(const fs::path& dir, const std::string& video_id, int height, int width,
                         const std::map<int, MaskTrack>& masks, const std::map<int, double>& scores) {
  json doc;
  doc["height"] = height;
  doc["width"] = width;
  json instances = json::array();
  for (const auto& [id, track] : masks) {
    std::vector<std::string> rles;
    for (const auto& m : track) rles.push_back(encode_mask(m));
    auto it = scores.find(id);
    instances.push_back({{"id", id}, {"score", it == scores.end() ? 1.0 : it->second}, {"rle", rles}});
  }
  doc["instances"] = instances;
  fs::create_directories(dir);
  std::ofstream out(dir / (video_id + ".json"), std::ios::trunc);
  if (!out) throw LoadError("cannot write instance file under " + dir.string());
  out << doc.dump(2) << '\n';
}

void init_instance_block(ParamStore& p, const ModelDims& dims, Rng& rng, bool zero_output) {
  nn::init_cross_attention_sublayer(p, "block.ca", dims.channels, rng, zero_output);
  for (int s = 0; s < dims.self_layers; ++s)
    nn::init_self_attention_sublayer(p, "block.sa" + std::to_string(s), dims.channels, rng, zero_output);
  nn::init_ffn_sublayer(p, "block.ffn", dims.channels, rng, zero_output);
}

void init_initial_query(ParamStore& p, const ModelDims& dims, Rng& rng) {
  Matrix q0(dims.queries, dims.channels);
  for (Eigen::Index i = 0; i < q0.size(); ++i) q0.data()[i] = rng.normal();
  p.set("q0", std::move(q0));
}

Var attention_block(Binder& b, const Var& query, const Var& inst, const ModelDims& dims,
                    const std::string& prefix) {
  if (query.cols() != dims.channels || inst.cols() != dims.channels)
    throw DomainError("attention_block: expected width " + std::to_string(dims.channels) + ", got query " +
                      std::to_string(query.cols()) + " and instance " + std::to_string(inst.cols()));
  if (inst.rows() < 1) throw DomainError("attention_block: instance feature has no temporal tokens");
  Var x = nn::cross_attention_sublayer(b, query, inst, prefix + ".ca", dims.heads);
  for (int s = 0; s < dims.self_layers; ++s)
    x = nn::self_attention_sublayer(b, x, prefix + ".sa" + std::to_string(s), dims.heads);
  x = nn::ffn_sublayer(b, x, prefix + ".ffn");
  nn::check_finite(x.value(), "attention_block output");
  return x;
}

Var aggregate_instance_queries(Binder& b, const Var& q0, const std::vector<Var>& instances, const ModelDims& dims,
                               const std::string& prefix) {
  for (const auto& f : instances)
    if (f.cols() != dims.channels)
      throw DomainError("aggregate_instance_queries: instance feature width " + std::to_string(f.cols()) +
                        " != " + std::to_string(dims.channels));
  Var q = q0;
  for (const auto& f : instances) q = attention_block(b, q, f, dims, prefix);
  return q;
}

Var instance_feature(Binder& b, const VideoClip& clip, const MaskTrack& masks, const ModelDims& dims,
                     const InstanceInitConfig& config) {
  if (static_cast<int>(masks.size()) != clip.num_frames())
    throw AlignmentError("instance mask track length does not match the clip");
  for (const auto& m : masks)
    if (m.rows() != clip.height() || m.cols() != clip.width())
      throw AlignmentError("instance mask size does not match the clip");
  const MultiScaleFeatures feat =
      config.masked_rgb
          ? extract_visual_features(b, stack_masked_rgb(masks, clip.frames), clip.num_frames(), clip.height(),
                                    clip.width(), dims)
          : extract_visual_features(b, masks, dims);
  if (!config.fuse_levels) return project_and_pool(b, feat, dims.num_levels() - 1);
  Var sum = project_and_pool(b, feat, 0);
  for (int j = 1; j < dims.num_levels(); ++j) sum = ad::add(sum, project_and_pool(b, feat, j));
  return sum;
}

Var build_video_query(Binder& b, const VideoClip& clip, const InstanceMaskSet& instances, const ModelDims& dims,
                      const InstanceInitConfig& config) {
  const Var q0 = b("q0");
  if (!config.enabled || instances.size() == 0) return q0;
  std::vector<Var> feats;
  for (const auto& track : instances.masks) feats.push_back(instance_feature(b, clip, track, dims, config));
  return aggregate_instance_queries(b, q0, feats, dims);
}

Var build_video_query(Binder& b, const VideoClip& clip, const std::map<int, MaskTrack>& tracks,
                      const ModelDims& dims, const InstanceInitConfig& config) {
  if (!config.enabled) return b("q0");
  return build_video_query(b, clip, provide_instance_masks(clip, tracks, config), dims, config);
}

}  // namespace rvos
