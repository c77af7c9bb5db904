#include "rvos/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "rvos/errors.hpp"
#include "rvos/rng.hpp"

namespace rvos {

namespace fs = std::filesystem;

SamplingPlan RunConfig::sampling_plan() const {
  SamplingPlan p = sampling;
  p.seed = sampling_seed.value_or(mix_seed(seed, 1));
  return p;
}

InstanceInitConfig RunConfig::instance_config() const {
  InstanceInitConfig c = instance_init;
  c.perturb_seed = perturb_seed.value_or(mix_seed(seed, 5));
  return c;
}

RefinerConfig RunConfig::refiner_config() const {
  RefinerConfig c = refiner;
  c.seed = refiner_seed.value_or(mix_seed(seed, 4));
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c = train;
  c.init_seed = init_seed.value_or(mix_seed(seed, 2));
  c.seed = train_seed.value_or(mix_seed(seed, 3));
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ValidationError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || value.empty()) bad_value(key, value, "a number");
  return out;
}

int parse_int(const std::string& k, const std::string& v) { return parse_number<int>(k, v); }
double parse_double(const std::string& k, const std::string& v) { return parse_number<double>(k, v); }
std::uint64_t parse_u64(const std::string& k, const std::string& v) { return parse_number<std::uint64_t>(k, v); }

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& s : parse_list(value)) out.push_back(parse_int(key, s));
  if (out.empty()) bad_value(key, value, "a comma-separated integer list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string opt(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : "auto"; }

std::optional<std::uint64_t> parse_opt(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  return parse_u64(key, value);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Field> table = {
      {"seed", [](C& c, S k, S v) { c.seed = parse_u64(k, v); }, [](const C& c) { return std::to_string(c.seed); }},
      {"data", [](C& c, S, S v) { c.data_dir = v; }, [](const C& c) { return c.data_dir.string(); }},
      {"out", [](C& c, S, S v) { c.out_dir = v; }, [](const C& c) { return c.out_dir.string(); }},
      {"checkpoint", [](C& c, S, S v) { c.checkpoint = v; }, [](const C& c) { return c.checkpoint.string(); }},
      {"predictions", [](C& c, S, S v) { c.predictions = v; }, [](const C& c) { return c.predictions.string(); }},

      {"gen.videos", [](C& c, S k, S v) { c.generator.n_videos = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.n_videos); }},
      {"gen.frames", [](C& c, S k, S v) { c.generator.frames = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.frames); }},
      {"gen.size",
       [](C& c, S k, S v) { c.generator.height = c.generator.width = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.height); }},
      {"gen.objects", [](C& c, S k, S v) { c.generator.objects_per_video = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.objects_per_video); }},
      {"gen.shape_min", [](C& c, S k, S v) { c.generator.shape_min = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.shape_min); }},
      {"gen.shape_max", [](C& c, S k, S v) { c.generator.shape_max = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.generator.shape_max); }},
      {"gen.split", [](C& c, S, S v) { c.generator.split = parse_split(v); },
       [](const C& c) { return to_string(c.generator.split); }},
      {"gen.mask_storage",
       [](C& c, S k, S v) {
         if (v == "rle") c.generator.mask_storage = MaskStorage::rle;
         else if (v == "png") c.generator.mask_storage = MaskStorage::png;
         else bad_value(k, v, "rle or png");
       },
       [](const C& c) { return std::string(c.generator.mask_storage == MaskStorage::rle ? "rle" : "png"); }},
      {"gen.shapes", [](C& c, S, S v) { c.generator.shapes = parse_list(v); },
       [](const C& c) { return join(c.generator.shapes); }},
      {"gen.colors", [](C& c, S, S v) { c.generator.colors = parse_list(v); },
       [](const C& c) { return join(c.generator.colors); }},
      {"gen.motions", [](C& c, S, S v) { c.generator.motions = parse_list(v); },
       [](const C& c) { return join(c.generator.motions); }},

      {"sampling.method", [](C& c, S, S v) { c.sampling.method = parse_sampling_method(v); },
       [](const C& c) { return to_string(c.sampling.method); }},
      {"sampling.num_frames", [](C& c, S k, S v) { c.sampling.num_frames = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.sampling.num_frames); }},
      {"sampling.seed", [](C& c, S k, S v) { c.sampling_seed = parse_opt(k, v); },
       [](const C& c) { return opt(c.sampling_seed); }},

      {"instance_init.enabled", [](C& c, S k, S v) { c.instance_init.enabled = parse_bool(k, v); },
       [](const C& c) { return std::string(c.instance_init.enabled ? "true" : "false"); }},
      {"instance_init.provider", [](C& c, S, S v) { c.instance_init.provider = parse_provider(v); },
       [](const C& c) { return to_string(c.instance_init.provider); }},
      {"instance_init.k_max", [](C& c, S k, S v) { c.instance_init.k_max = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.instance_init.k_max); }},
      {"instance_init.score_threshold",
       [](C& c, S k, S v) { c.instance_init.score_threshold = parse_double(k, v); },
       [](const C& c) { return fmt(c.instance_init.score_threshold); }},
      {"instance_init.provider_dir", [](C& c, S, S v) { c.instance_init.provider_dir = v; },
       [](const C& c) { return c.instance_init.provider_dir.string(); }},
      {"instance_init.perturb_radius", [](C& c, S k, S v) { c.instance_init.perturb_radius = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.instance_init.perturb_radius); }},
      {"instance_init.perturb_dropout",
       [](C& c, S k, S v) { c.instance_init.perturb_dropout = parse_double(k, v); },
       [](const C& c) { return fmt(c.instance_init.perturb_dropout); }},
      {"instance_init.perturb_seed", [](C& c, S k, S v) { c.perturb_seed = parse_opt(k, v); },
       [](const C& c) { return opt(c.perturb_seed); }},
      {"instance_init.masked_rgb", [](C& c, S k, S v) { c.instance_init.masked_rgb = parse_bool(k, v); },
       [](const C& c) { return std::string(c.instance_init.masked_rgb ? "true" : "false"); }},
      {"instance_init.fuse_levels", [](C& c, S k, S v) { c.instance_init.fuse_levels = parse_bool(k, v); },
       [](const C& c) { return std::string(c.instance_init.fuse_levels ? "true" : "false"); }},
      {"block.self_layers", [](C& c, S k, S v) { c.dims.self_layers = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.dims.self_layers); }},

      {"model.channels", [](C& c, S k, S v) { c.dims.channels = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.dims.channels); }},
      {"model.heads", [](C& c, S k, S v) { c.dims.heads = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.dims.heads); }},
      {"model.queries", [](C& c, S k, S v) { c.dims.queries = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.dims.queries); }},
      {"model.decoder_layers", [](C& c, S k, S v) { c.dims.decoder_layers = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.dims.decoder_layers); }},
      {"model.level_strides", [](C& c, S k, S v) { c.dims.level_strides = parse_int_list(k, v); },
       [](const C& c) { return join(c.dims.level_strides); }},
      {"model.level_channels", [](C& c, S k, S v) { c.dims.level_channels = parse_int_list(k, v); },
       [](const C& c) { return join(c.dims.level_channels); }},

      {"train.steps", [](C& c, S k, S v) { c.train.steps = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.train.steps); }},
      {"train.lr", [](C& c, S k, S v) { c.train.lr = parse_double(k, v); },
       [](const C& c) { return fmt(c.train.lr); }},
      {"train.weight_decay", [](C& c, S k, S v) { c.train.weight_decay = parse_double(k, v); },
       [](const C& c) { return fmt(c.train.weight_decay); }},
      {"train.accumulation", [](C& c, S k, S v) { c.train.accumulation = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.train.accumulation); }},
      {"train.batch", [](C& c, S k, S v) { c.train.batch = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.train.batch); }},
      {"train.init_seed", [](C& c, S k, S v) { c.init_seed = parse_opt(k, v); },
       [](const C& c) { return opt(c.init_seed); }},
      {"train.seed", [](C& c, S k, S v) { c.train_seed = parse_opt(k, v); },
       [](const C& c) { return opt(c.train_seed); }},
      {"overfit.expression", [](C& c, S, S v) { c.overfit_expression = v; },
       [](const C& c) { return c.overfit_expression; }},

      {"refiner", [](C& c, S, S v) { c.refiner.kind = parse_refiner(v); },
       [](const C& c) { return to_string(c.refiner.kind); }},
      {"refiner.dir", [](C& c, S, S v) { c.refiner.exchange_dir = v; },
       [](const C& c) { return c.refiner.exchange_dir.string(); }},
      {"refiner.command", [](C& c, S, S v) { c.refiner.command = v; }, [](const C& c) { return c.refiner.command; }},
      {"refiner.on_error", [](C& c, S, S v) { c.refiner.on_error = parse_on_error(v); },
       [](const C& c) {
         return std::string(c.refiner.on_error == OnError::abort ? "abort" : "keep_original");
       }},
      {"refiner.threshold", [](C& c, S k, S v) { c.refiner.threshold = parse_double(k, v); },
       [](const C& c) { return fmt(c.refiner.threshold); }},
      {"refiner.seed", [](C& c, S k, S v) { c.refiner_seed = parse_opt(k, v); },
       [](const C& c) { return opt(c.refiner_seed); }},

      {"eval.tolerance", [](C& c, S k, S v) { c.tolerance = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.tolerance); }},
      {"ablate.steps", [](C& c, S k, S v) { c.ablate_steps = parse_int(k, v); },
       [](const C& c) { return std::to_string(c.ablate_steps); }},
      {"jobs", [](C& c, S k, S v) { c.jobs = parse_int(k, v); }, [](const C& c) { return std::to_string(c.jobs); }},
  };
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.key == key) {
      f.set(config, key, trim(value));
      return;
    }
  throw ValidationError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("config file not found: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace rvos
