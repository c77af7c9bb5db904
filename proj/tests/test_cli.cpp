#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "rvos/config.hpp"
#include "rvos/errors.hpp"
#include "rvos/harness.hpp"
#include "rvos/params.hpp"
#include "rvos/model.hpp"
#include "test_util.hpp"

namespace rvos {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args, const fs::path& scratch) {
  const fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
  const std::string cmd = std::string(RVOS_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::read_file(o);
  r.err = testing::read_file(e);
  return r;
}

std::map<std::string, std::string> read_dump(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(testing::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const RunResult g = run("gen-data --videos 2 --frames 8 --size 32 --seed 3 --out " + data().string(), dir_->path());
    ASSERT_EQ(g.code, 0) << g.err;
    const RunResult o = run("overfit --data " + data().string() + " --steps 6 --out " + (root() / "fit").string(),
                            dir_->path());
    ASSERT_EQ(o.code, 0) << o.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path data() { return root() / "data"; }
  static fs::path ckpt() { return root() / "fit" / "checkpoint.bin"; }
  static RunResult cli(const std::string& args) { return run(args, root()); }

  static TempDir* dir_;
};
TempDir* Cli::dir_ = nullptr;

TEST(Config, DefaultsFileThenFlags) {
  TempDir dir("cfg");
  RunConfig c;
  EXPECT_EQ(c.train.accumulation, 2);
  EXPECT_EQ(c.train.batch, 1);
  EXPECT_EQ(c.sampling.num_frames, 5);
  std::ofstream(dir / "run.cfg") << "# comment\ntrain.steps = 40\ntrain.lr=0.01\n\nsampling.method = local\n";
  apply_config_file(c, dir / "run.cfg");
  EXPECT_EQ(c.train.steps, 40);
  EXPECT_DOUBLE_EQ(c.train.lr, 0.01);
  EXPECT_EQ(c.sampling.method, SamplingMethod::local);
  apply_setting(c, "train.steps", "7");
  EXPECT_EQ(c.train.steps, 7);
  EXPECT_DOUBLE_EQ(c.train.lr, 0.01);
}

TEST(Config, BadInputIsValidationError) {
  TempDir dir("cfgbad");
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "train.stepz", "1"), ValidationError);
  EXPECT_THROW(apply_setting(c, "train.steps", "many"), ValidationError);
  EXPECT_THROW(apply_setting(c, "sampling.method", "random"), ValidationError);
  EXPECT_THROW(apply_setting(c, "jobs", "2.5"), ValidationError);
  std::ofstream(dir / "bad.cfg") << "seed = 1\nno equals sign here\n";
  try {
    apply_config_file(c, dir / "bad.cfg");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Config, DumpRoundTrips) {
  RunConfig a;
  apply_setting(a, "seed", "99");
  apply_setting(a, "sampling.method", "local");
  apply_setting(a, "instance_init.k_max", "3");
  apply_setting(a, "refiner", "stub");
  RunConfig b;
  for (const auto& [k, v] : [&] {
         std::map<std::string, std::string> kv;
         std::istringstream in(dump_config(a));
         std::string line;
         while (std::getline(in, line)) kv[line.substr(0, line.find(" = "))] = line.substr(line.find(" = ") + 3);
         return kv;
       }())
    if (!v.empty()) apply_setting(b, k, v);
  EXPECT_EQ(dump_config(a), dump_config(b));
}

TEST(Config, SeedsDeriveFromMaster) {
  RunConfig a, b;
  apply_setting(a, "seed", "1");
  apply_setting(b, "seed", "2");
  EXPECT_NE(a.sampling_plan().seed, b.sampling_plan().seed);
  EXPECT_NE(a.train_config().init_seed, a.train_config().seed);
  apply_setting(b, "train.init_seed", "1234");
  EXPECT_EQ(b.train_config().init_seed, 1234u);
}

TEST_F(Cli, PrecedenceThroughBinary) {
  std::ofstream(root() / "p.cfg") << "train.steps = 5\ntrain.lr = 0.002\nsampling.num_frames = 4\n";
  const fs::path out = root() / "prec";
  const RunResult r = cli("overfit --config " + (root() / "p.cfg").string() + " --data " + data().string() +
                          " --steps 2 --set sampling.num_frames=3 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = read_dump(out / "config.txt");
  EXPECT_EQ(kv.at("train.steps"), "2");              // flag beats file
  EXPECT_EQ(std::stod(kv.at("train.lr")), 0.002);    // file beats default
  EXPECT_EQ(kv.at("sampling.num_frames"), "3");      // --set beats file
  EXPECT_EQ(kv.at("train.accumulation"), "2");       // default
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli("gen-data --size 2 --out " + (root() / "tiny").string()).code, 2);
  EXPECT_EQ(cli("no-such-command").code, 2);
  EXPECT_EQ(cli("overfit --data " + data().string() + " --steps lots").code, 2);
  EXPECT_EQ(cli("overfit --data " + (root() / "nowhere").string()).code, 3);
  const RunResult r = cli("infer --data " + data().string() + " --checkpoint " + (root() / "absent.bin").string() +
                          " --out " + (root() / "inf_missing").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("absent.bin"), std::string::npos);
  EXPECT_EQ(cli("infer --data " + data().string() + " --out " + (root() / "inf_none").string()).code, 2);
  EXPECT_EQ(cli("overfit --data " + data().string() + " --set train.batch=2 --out " + (root() / "b2").string()).code,
            2);
}

TEST_F(Cli, ZeroStepsCheckpointIsInitialization) {
  const fs::path out = root() / "zero";
  ASSERT_EQ(cli("overfit --data " + data().string() + " --steps 0 --seed 4 --out " + out.string()).code, 0);
  RunConfig c;
  apply_setting(c, "seed", "4");
  EXPECT_TRUE(ParamStore::load(out / "checkpoint.bin") == init_model(c.dims, c.train_config().init_seed));
  EXPECT_TRUE(testing::read_file(out / "train_log.jsonl").empty());
}

TEST_F(Cli, LogHasOneRecordPerStep) {
  std::istringstream in(testing::read_file(root() / "fit" / "train_log.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_EQ(j.at("step").get<int>(), n + 1);
    EXPECT_TRUE(std::isfinite(j.at("loss").get<double>()));
    ++n;
  }
  EXPECT_EQ(n, 6);
  const json summary = json::parse(testing::read_file(root() / "fit" / "overfit.json"));
  EXPECT_EQ(summary.at("steps").get<int>(), 6);
}

TEST_F(Cli, InferCoversManifestAndIdentityRefinerChangesNothing) {
  const std::string base = "infer --data " + data().string() + " --checkpoint " + ckpt().string();
  ASSERT_EQ(cli(base + " --refiner none --out " + (root() / "p_none").string()).code, 0);
  ASSERT_EQ(cli(base + " --refiner identity --out " + (root() / "p_id").string()).code, 0);
  const auto a = testing::snapshot_tree(root() / "p_none"), b = testing::snapshot_tree(root() / "p_id");
  EXPECT_EQ(a, b);
  const json manifest = json::parse(testing::read_file(data() / "manifest.json"));
  EXPECT_EQ(a.size(), manifest.at("expressions").size());
  for (const auto& e : manifest.at("expressions"))
    EXPECT_TRUE(a.count(e.at("expression_id").get<std::string>() + ".json"));
}

TEST_F(Cli, EvalGroundTruthAndMean) {
  // Ground truth as predictions, written in the prediction format.
  const DatasetManifest m = load_manifest(data());
  std::map<std::string, Prediction> gt;
  for (const auto& e : m.expressions) gt[e.expression_id] = Prediction{{0, 3, 5}, m.target_union(e, {0, 3, 5})};
  write_predictions(root() / "gt_preds", m, gt);
  const RunResult r = cli("eval --data " + data().string() + " --predictions " + (root() / "gt_preds").string() +
                          " --out " + (root() / "gt_eval").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(testing::read_file(root() / "gt_eval" / "report.json"));
  EXPECT_EQ(rep.at("aggregate").at("JF").get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(root() / "gt_eval" / "report.md"));

  const std::string preds = (root() / "p_mean").string();
  ASSERT_EQ(cli("infer --data " + data().string() + " --checkpoint " + ckpt().string() + " --out " + preds).code, 0);
  ASSERT_EQ(cli("eval --data " + data().string() + " --predictions " + preds + " --out " +
                (root() / "mean_eval").string())
                .code,
            0);
  const json mean = json::parse(testing::read_file(root() / "mean_eval" / "report.json"));
  double sum = 0;
  for (const auto& [id, s] : mean.at("per_expression").items()) sum += s.at("JF").get<double>();
  EXPECT_NEAR(mean.at("aggregate").at("JF").get<double>(), sum / static_cast<double>(mean.at("per_expression").size()),
              1e-12);
}

TEST_F(Cli, EvalMissingPredictionNamesIt) {
  const DatasetManifest m = load_manifest(data());
  std::map<std::string, Prediction> gt;
  for (std::size_t i = 1; i < m.expressions.size(); ++i)
    gt[m.expressions[i].expression_id] = Prediction{{0, 1}, m.target_union(m.expressions[i], {0, 1})};
  write_predictions(root() / "partial", m, gt);
  const RunResult r = cli("eval --data " + data().string() + " --predictions " + (root() / "partial").string() +
                          " --out " + (root() / "partial_eval").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find(m.expressions[0].expression_id), std::string::npos) << r.err;
}

TEST_F(Cli, AblateEmitsSixRowTable) {
  const fs::path out = root() / "ablate";
  const RunResult r = cli("ablate --data " + data().string() + " --steps 4 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string md = testing::read_file(out / "ablation.md");
  EXPECT_NE(md.find("| Sampling Method | Instance Masks | HQ-SAM | J&F | J | F |"), std::string::npos);
  const std::regex row(R"(\| (Local|Global) \| (✓|✗) \| (✓|✗) \| [0-9.]+ \| [0-9.]+ \| [0-9.]+ \|)");
  std::vector<std::string> pattern;
  for (auto it = std::sregex_iterator(md.begin(), md.end(), row); it != std::sregex_iterator(); ++it)
    pattern.push_back((*it)[1].str() + (*it)[2].str() + (*it)[3].str());
  EXPECT_EQ(pattern, (std::vector<std::string>{"Local✗✗", "Local✗✓", "Global✗✗", "Global✗✓", "Global✓✗",
                                               "Global✓✓"}));
  const json rows = json::parse(testing::read_file(out / "ablation.json")).at("rows");
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& x : rows) EXPECT_FALSE(x.at("failed").get<bool>());
  EXPECT_NE(md.find("from scratch"), std::string::npos);
}

}  // namespace
}  // namespace rvos
