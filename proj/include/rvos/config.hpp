#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rvos/generator.hpp"
#include "rvos/instance_query.hpp"
#include "rvos/model_dims.hpp"
#include "rvos/refine.hpp"
#include "rvos/sampling.hpp"
#include "rvos/train.hpp"

namespace rvos {

/// Every setting of a CLI run. Seeds left unset derive from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;   // empty: <out>/checkpoint.bin for overfit
  std::filesystem::path predictions;  // eval input

  GeneratorConfig generator;
  SamplingPlan sampling;
  std::optional<std::uint64_t> sampling_seed;
  InstanceInitConfig instance_init;
  std::optional<std::uint64_t> perturb_seed;
  RefinerConfig refiner;
  std::optional<std::uint64_t> refiner_seed;
  ModelDims dims;
  TrainConfig train;
  std::optional<std::uint64_t> init_seed;
  std::optional<std::uint64_t> train_seed;

  std::string overfit_expression;  // empty: first expression of the manifest
  int tolerance = -1;              // < 0: ceil(0.008 * diagonal)
  int ablate_steps = 300;
  int jobs = 1;

  /// Effective sub-configurations with derived seeds filled in.
  SamplingPlan sampling_plan() const;
  InstanceInitConfig instance_config() const;
  RefinerConfig refiner_config() const;
  TrainConfig train_config() const;
};

/// Sets one dotted key from its text value. Throws ValidationError for an
/// unknown key or an unparsable value.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads `key = value` lines; `#` starts a comment, blank lines are ignored.
/// Throws LoadError when the file is missing, ValidationError on bad lines.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Every key with its current value, one `key = value` line each, in the
/// file format read by apply_config_file.
std::string dump_config(const RunConfig& config);

std::vector<std::string> config_keys();

}  // namespace rvos
