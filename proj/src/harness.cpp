#include "rvos/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "rvos/errors.hpp"
#include "rvos/generator.hpp"
#include "rvos/model.hpp"
#include "rvos/rle.hpp"
#include "rvos/rng.hpp"

namespace rvos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void validate_run(const RunConfig& c) {
  c.dims.validate();
  if (c.sampling.num_frames < 1) throw ValidationError("sampling.num_frames must be >= 1");
  if (c.train.steps < 0) throw ValidationError("train.steps must be >= 0");
  if (c.train.accumulation < 1) throw ValidationError("train.accumulation must be >= 1");
  if (c.train.batch != 1) throw ValidationError("train.batch must be 1");
  if (!(c.train.lr > 0)) throw ValidationError("train.lr must be > 0");
  if (c.instance_init.k_max < 0) throw ValidationError("instance_init.k_max must be >= 0");
  if (c.jobs < 1) throw ValidationError("jobs must be >= 1");
  if (c.ablate_steps < 0) throw ValidationError("ablate.steps must be >= 0");
}

TrainingExample make_example(const DatasetManifest& manifest, const ExpressionSample& e,
                             const std::vector<int>& indices) {
  const VideoEntry& v = manifest.video(e.video_id);
  return TrainingExample{v.clip(indices), e.expression, manifest.target_tracks(e, indices), v.tracks_at(indices)};
}

}  // namespace

std::vector<int> clip_indices(const VideoEntry& video, const SamplingPlan& plan) {
  SamplingPlan p = plan;
  p.seed = mix_seed(plan.seed, fnv1a(video.video_id));
  return sample_frames(video.source_length, p);
}

void train_model(ParamStore& params, const DatasetManifest& manifest, const std::vector<std::string>& expression_ids,
                 const RunConfig& config, const std::function<void(const TrainRecord&)>& on_step) {
  if (expression_ids.empty()) throw ValidationError("training set has no expressions");
  const TrainConfig tc = config.train_config();
  const SamplingPlan plan = config.sampling_plan();
  Trainer trainer(params, config.dims, config.instance_config(), tc);
  for (int s = 0; s < tc.steps; ++s) {
    Rng rng(mix_seed(tc.seed, static_cast<std::uint64_t>(s)));
    const ExpressionSample& e = manifest.expression(expression_ids[rng.index(expression_ids.size())]);
    SamplingPlan step_plan = plan;
    step_plan.seed = rng.next();
    const auto indices = sample_frames(manifest.video(e.video_id).source_length, step_plan);
    const double loss = trainer.step(make_example(manifest, e, indices));
    if (on_step) on_step({s + 1, loss, trainer.learning_rate()});
  }
}

std::map<std::string, Prediction> predict_dataset(const ParamStore& params, const DatasetManifest& manifest,
                                                  const RunConfig& config) {
  const SamplingPlan plan = config.sampling_plan();
  const InstanceInitConfig inst = config.instance_config();
  const RefinerConfig rc = config.refiner_config();
  std::unique_ptr<Refiner> refiner = make_refiner(rc);
  std::map<std::string, Prediction> out;
  for (const auto& e : manifest.expressions) {
    const VideoEntry& v = manifest.video(e.video_id);
    Prediction p;
    p.frame_indices = clip_indices(v, plan);
    const VideoClip clip = v.clip(p.frame_indices);
    const auto tracks = v.tracks_at(p.frame_indices);
    SegmentationOutput seg = forward_pipeline(params, {&clip, e.expression, &tracks}, config.dims, inst);
    if (refiner) {
      if (auto* ext = dynamic_cast<ExternalRefiner*>(refiner.get())) ext->set_request_key(e.expression_id);
      seg = refine_masks(seg, clip, *refiner, mix_seed(rc.seed, fnv1a(e.expression_id)), rc.on_error);
    }
    p.masks = std::move(seg.binary_masks);
    out.emplace(e.expression_id, std::move(p));
  }
  return out;
}

void write_predictions(const fs::path& dir, const DatasetManifest& manifest,
                       const std::map<std::string, Prediction>& predictions) {
  fs::create_directories(dir);
  for (const auto& [id, p] : predictions) {
    const ExpressionSample& e = manifest.expression(id);
    const VideoEntry& v = manifest.video(e.video_id);
    std::vector<std::string> rles;
    for (const auto& m : p.masks) rles.push_back(encode_mask(m));
    json doc = {{"expression_id", id}, {"video_id", e.video_id}, {"height", v.height},
                {"width", v.width},    {"frame_indices", p.frame_indices}, {"rle", rles}};
    write_text(dir / (id + ".json"), doc.dump(2) + "\n");
  }
}

std::map<std::string, Prediction> read_predictions(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("predictions directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, Prediction> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      const json doc = json::parse(in);
      const int h = doc.at("height").get<int>(), w = doc.at("width").get<int>();
      Prediction p;
      p.frame_indices = doc.at("frame_indices").get<std::vector<int>>();
      for (const auto& r : doc.at("rle").get<std::vector<std::string>>()) p.masks.push_back(decode_mask(r, h, w));
      if (p.masks.size() != p.frame_indices.size())
        throw ValidationError(f.string() + ": rle and frame_indices lengths differ");
      out.emplace(doc.at("expression_id").get<std::string>(), std::move(p));
    } catch (const json::exception& e) {
      throw ValidationError(f.string() + ": " + e.what());
    } catch (const DecodeError& e) {
      throw ValidationError(f.string() + ": " + e.what());
    }
  }
  return out;
}

DatasetManifest cmd_gen_data(const RunConfig& config) {
  return generate_synthetic_dataset(config.generator, config.seed, config.out_dir);
}

OverfitResult cmd_overfit(const RunConfig& config) {
  validate_run(config);
  const auto start = std::chrono::steady_clock::now();
  const DatasetManifest manifest = load_manifest(config.data_dir);
  if (manifest.expressions.empty()) throw ValidationError("manifest has no expressions");
  const ExpressionSample& e = config.overfit_expression.empty() ? manifest.expressions.front()
                                                                : manifest.expression(config.overfit_expression);
  OverfitResult result;
  result.expression_id = e.expression_id;
  result.steps = config.train.steps;
  result.checkpoint = config.checkpoint.empty() ? config.out_dir / "checkpoint.bin" : config.checkpoint;
  fs::create_directories(config.out_dir);

  ParamStore params = init_model(config.dims, config.train_config().init_seed);
  std::string log;
  train_model(params, manifest, {e.expression_id}, config, [&](const TrainRecord& r) {
    log += json({{"step", r.step}, {"loss", r.loss}, {"lr", r.lr}}).dump() + "\n";
    result.final_loss = r.loss;
  });
  write_text(config.out_dir / "train_log.jsonl", log);
  params.save(result.checkpoint);
  write_text(config.out_dir / "config.txt", dump_config(config));

  const VideoEntry& v = manifest.video(e.video_id);
  const auto indices = clip_indices(v, config.sampling_plan());
  const VideoClip clip = v.clip(indices);
  const auto tracks = v.tracks_at(indices);
  const SegmentationOutput seg =
      forward_pipeline(params, {&clip, e.expression, &tracks}, config.dims, config.instance_config());
  const int tol = config.tolerance < 0 ? default_tolerance(v.height, v.width) : config.tolerance;
  result.train_score = jf_score(seg.binary_masks, manifest.target_union(e, indices), tol);

  write_text(config.out_dir / "overfit.json",
             json({{"expression_id", e.expression_id},
                   {"steps", result.steps},
                   {"final_loss", result.final_loss},
                   {"J", result.train_score.J},
                   {"F", result.train_score.F},
                   {"JF", result.train_score.JF}})
                     .dump(2) +
                 "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(config.out_dir / "meta.json",
             json({{"command", "overfit"}, {"finished_utc", utc_timestamp()}, {"seconds", secs}}).dump(2) + "\n");
  return result;
}

std::map<std::string, Prediction> cmd_infer(const RunConfig& config) {
  validate_run(config);
  if (config.checkpoint.empty()) throw ValidationError("infer needs a checkpoint (--checkpoint)");
  if (!fs::exists(config.checkpoint)) throw LoadError("checkpoint not found: " + config.checkpoint.string());
  const DatasetManifest manifest = load_manifest(config.data_dir);
  const ParamStore params = ParamStore::load(config.checkpoint);
  RunConfig rc = config;
  if (rc.refiner.kind == RefinerKind::external && rc.refiner.exchange_dir.empty())
    rc.refiner.exchange_dir = config.out_dir / "refiner";
  auto predictions = predict_dataset(params, manifest, rc);
  write_predictions(config.out_dir, manifest, predictions);
  return predictions;
}

MetricsReport cmd_eval(const RunConfig& config) {
  if (config.predictions.empty()) throw ValidationError("eval needs a predictions directory (--predictions)");
  const DatasetManifest manifest = load_manifest(config.data_dir);
  const MetricsReport report = evaluate_dataset(read_predictions(config.predictions), manifest, config.tolerance);
  fs::create_directories(config.out_dir);
  write_report_json(config.out_dir / "report.json", report);
  write_text(config.out_dir / "report.md", report_markdown(report));
  return report;
}

std::string AblationRow::tag() const {
  return to_string(sampling) + "_inst-" + (instance_masks ? "on" : "off") + "_refine-" + (refine ? "on" : "off");
}

bool AblationResult::all_ok() const {
  return std::none_of(rows.begin(), rows.end(), [](const AblationRow& r) { return r.failed; });
}

std::vector<AblationRow> ablation_grid() {
  std::vector<AblationRow> rows;
  const std::pair<SamplingMethod, bool> trained[] = {
      {SamplingMethod::local, false}, {SamplingMethod::global, false}, {SamplingMethod::global, true}};
  for (const auto& [method, inst] : trained)
    for (bool refine : {false, true}) {
      AblationRow r;
      r.sampling = method;
      r.instance_masks = inst;
      r.refine = refine;
      rows.push_back(r);
    }
  return rows;
}

AblationResult cmd_ablate(const RunConfig& config) {
  validate_run(config);
  const auto start = std::chrono::steady_clock::now();
  const DatasetManifest manifest = load_manifest(config.data_dir);
  std::vector<std::string> ids;
  for (const auto& e : manifest.expressions) ids.push_back(e.expression_id);
  fs::create_directories(config.out_dir);

  AblationResult result;
  result.rows = ablation_grid();
  const std::size_t n_models = result.rows.size() / 2;
  std::mutex io;

  auto run_pair = [&](std::size_t m) {
    AblationRow& off = result.rows[2 * m];
    AblationRow& on = result.rows[2 * m + 1];
    RunConfig rc = config;
    rc.sampling.method = off.sampling;
    rc.instance_init.enabled = off.instance_masks;
    rc.train.steps = config.ablate_steps;
    rc.refiner.kind = RefinerKind::none;
    const fs::path dir = config.out_dir / (to_string(off.sampling) + "_inst-" + (off.instance_masks ? "on" : "off"));
    try {
      fs::create_directories(dir);
      ParamStore params = init_model(rc.dims, rc.train_config().init_seed);
      std::string log;
      train_model(params, manifest, ids, rc, [&](const TrainRecord& r) {
        log += json({{"step", r.step}, {"loss", r.loss}, {"lr", r.lr}}).dump() + "\n";
      });
      write_text(dir / "train_log.jsonl", log);
      params.save(dir / "checkpoint.bin");
      for (AblationRow* row : {&off, &on}) {
        RunConfig row_cfg = rc;
        if (row->refine) {
          row_cfg.refiner = config.refiner;
          if (row_cfg.refiner.kind == RefinerKind::none) row_cfg.refiner.kind = RefinerKind::stub;
          if (row_cfg.refiner.kind == RefinerKind::external && row_cfg.refiner.exchange_dir.empty())
            row_cfg.refiner.exchange_dir = config.out_dir / row->tag() / "refiner";
        }
        try {
          const auto preds = predict_dataset(params, manifest, row_cfg);
          const MetricsReport report = evaluate_dataset(preds, manifest, config.tolerance);
          fs::create_directories(config.out_dir / row->tag());
          write_report_json(config.out_dir / row->tag() / "report.json", report);
          row->score = report.aggregate;
        } catch (const std::exception& e) {
          row->failed = true;
          row->error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (AblationRow* row : {&off, &on}) {
        row->failed = true;
        row->error = e.what();
      }
    }
    std::lock_guard<std::mutex> lock(io);
    std::cerr << "ablate: finished " << dir.filename().string() << "\n";
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n_models);
  if (workers <= 1) {
    for (std::size_t m = 0; m < n_models; ++m) run_pair(m);
  } else {
    std::vector<std::thread> pool;
    std::mutex next_mutex;
    std::size_t next = 0;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t m;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= n_models) return;
            m = next++;
          }
          run_pair(m);
        }
      });
    for (auto& t : pool) t.join();
  }

  json rows = json::array();
  for (const auto& r : result.rows)
    rows.push_back({{"sampling", to_string(r.sampling)},
                    {"instance_masks", r.instance_masks},
                    {"refine", r.refine},
                    {"failed", r.failed},
                    {"error", r.error},
                    {"J", r.score.J},
                    {"F", r.score.F},
                    {"JF", r.score.JF}});
  write_text(config.out_dir / "ablation.json", json({{"rows", rows}}).dump(2) + "\n");
  write_text(config.out_dir / "ablation.md", ablation_markdown(result, config));
  write_text(config.out_dir / "config.txt", dump_config(config));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(config.out_dir / "meta.json",
             json({{"command", "ablate"}, {"finished_utc", utc_timestamp()}, {"seconds", secs}}).dump(2) + "\n");
  return result;
}

std::string ablation_markdown(const AblationResult& result, const RunConfig& config) {
  std::string md = "# Ablation\n\n";
  md += "Desk-scale grid: every model is trained from scratch on the synthetic set for " +
        std::to_string(config.ablate_steps) +
        " steps from one shared initialization and scored on its own training expressions. The numbers are not "
        "comparable to published benchmark results.\n\n";
  md += "Training: lr " + json(config.train.lr).dump() + ", accumulation " + std::to_string(config.train.accumulation) +
        ", batch " + std::to_string(config.train.batch) + ", T = " + std::to_string(config.sampling.num_frames) +
        ". Refiner for HQ-SAM rows: " +
        (config.refiner.kind == RefinerKind::none ? std::string("stub") : to_string(config.refiner.kind)) + ".\n\n";
  md += "| Sampling Method | Instance Masks | HQ-SAM | J&F | J | F |\n|---|---|---|---|---|---|\n";
  char buf[64];
  for (const auto& r : result.rows) {
    md += "| " + std::string(r.sampling == SamplingMethod::local ? "Local" : "Global") + " | " +
          (r.instance_masks ? "✓" : "✗") + " | " + (r.refine ? "✓" : "✗") + " | ";
    if (r.failed) {
      md += "failed | failed | failed |\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.2f | %.2f | %.2f |\n", 100 * r.score.JF, 100 * r.score.J, 100 * r.score.F);
    md += buf;
  }
  for (const auto& r : result.rows)
    if (r.failed) md += "\n" + r.tag() + ": " + r.error + "\n";
  return md;
}

}  // namespace rvos
