// rvos: data generation, overfit training, inference, evaluation and the
// ablation grid for the toy referring video segmentation pipeline.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rvos/errors.hpp"
#include "rvos/harness.hpp"

namespace {


struct Flag {
  std::string name;
  std::string key;
  std::string help;
};

void add_flags(CLI::App* cmd, const std::vector<Flag>& flags, std::map<std::string, std::string>& values) {
  for (const auto& f : flags) cmd->add_option(f.name, values[f.key], f.help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toy referring video object segmentation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", values["seed"], "master seed");
  app.add_option("--out", values["out"], "output directory");
  app.add_option("--set", sets, "extra KEY=VALUE override (repeatable)");

  const std::vector<Flag> data_flag = {{"--data", "data", "dataset directory or manifest.json"}};
  const std::vector<Flag> model_flags = {
      {"--sampling", "sampling.method", "local or global"},
      {"--num-frames", "sampling.num_frames", "frames per clip (T)"},
      {"--instance-init", "instance_init.enabled", "true or false"},
      {"--provider", "instance_init.provider", "oracle, perturbed or file"},
      {"--k-max", "instance_init.k_max", "cap on instance masks"},
      {"--provider-dir", "instance_init.provider_dir", "directory of <video>.json instance files"},
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic moving-shapes dataset");
  add_flags(gen,
            {{"--videos", "gen.videos", "number of videos"},
             {"--frames", "gen.frames", "frames per video"},
             {"--size", "gen.size", "frame height and width"},
             {"--objects", "gen.objects", "objects per video"},
             {"--mask-storage", "gen.mask_storage", "rle or png"}},
            values);

  auto* overfit = app.add_subcommand("overfit", "train on one expression and report train J&F");
  add_flags(overfit, data_flag, values);
  add_flags(overfit, model_flags, values);
  add_flags(overfit,
            {{"--steps", "train.steps", "training steps"},
             {"--lr", "train.lr", "learning rate"},
             {"--expression", "overfit.expression", "expression id (default: first)"},
             {"--checkpoint", "checkpoint", "checkpoint path (default: <out>/checkpoint.bin)"}},
            values);

  auto* infer = app.add_subcommand("infer", "predict masks for every expression");
  add_flags(infer, data_flag, values);
  add_flags(infer, model_flags, values);
  add_flags(infer,
            {{"--checkpoint", "checkpoint", "trained checkpoint"},
             {"--refiner", "refiner", "none, identity, stub or external"},
             {"--refiner-dir", "refiner.dir", "exchange directory for the external refiner"},
             {"--refiner-cmd", "refiner.command", "command run per request, {dir} is substituted"},
             {"--on-error", "refiner.on_error", "keep_original or abort"}},
            values);

  auto* eval = app.add_subcommand("eval", "score predictions against the manifest");
  add_flags(eval, data_flag, values);
  add_flags(eval,
            {{"--predictions", "predictions", "predictions directory"},
             {"--tolerance", "eval.tolerance", "boundary tolerance in pixels"}},
            values);

  auto* ablate = app.add_subcommand("ablate", "run the six-row ablation grid");
  add_flags(ablate, data_flag, values);
  add_flags(ablate,
            {{"--steps", "ablate.steps", "training steps per model"},
             {"--jobs", "jobs", "parallel training workers"},
             {"--k-max", "instance_init.k_max", "cap on instance masks"},
             {"--refiner", "refiner", "refiner for the refine rows (default stub)"},
             {"--tolerance", "eval.tolerance", "boundary tolerance in pixels"}},
            values);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    rvos::RunConfig config;
    if (!config_path.empty()) rvos::apply_config_file(config, config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw rvos::ValidationError("--set expects KEY=VALUE, got '" + s + "'");
      rvos::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : values)
      if (!value.empty()) rvos::apply_setting(config, key, value);

    if (gen->parsed()) {
      const auto m = rvos::cmd_gen_data(config);
      std::printf("wrote %zu videos, %zu expressions to %s\n", m.videos.size(), m.expressions.size(),
                  config.out_dir.string().c_str());
    } else if (overfit->parsed()) {
      const auto r = rvos::cmd_overfit(config);
      std::printf("expression %s: %d steps, final loss %.6f\n", r.expression_id.c_str(), r.steps, r.final_loss);
      std::printf("final train J&F %.4f (J %.4f, F %.4f)\n", r.train_score.JF, r.train_score.J, r.train_score.F);
      std::printf("checkpoint %s\n", r.checkpoint.string().c_str());
    } else if (infer->parsed()) {
      const auto p = rvos::cmd_infer(config);
      std::printf("wrote %zu predictions to %s\n", p.size(), config.out_dir.string().c_str());
    } else if (eval->parsed()) {
      const auto r = rvos::cmd_eval(config);
      std::printf("%d expressions: J&F %.4f, J %.4f, F %.4f\n", r.n_expressions, r.aggregate.JF, r.aggregate.J,
                  r.aggregate.F);
    } else if (ablate->parsed()) {
      const auto r = rvos::cmd_ablate(config);
      std::cout << rvos::ablation_markdown(r, config);
      if (!r.all_ok()) return 3;
    }
  } catch (const rvos::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
