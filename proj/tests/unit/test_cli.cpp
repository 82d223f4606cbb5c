#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "nde/cli/commands.hpp"
#include "nde/markov/assemble.hpp"

using namespace nde;
using namespace nde::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

const char* kTiny = R"(
[run]
seed = 7
[gen]
hours = 0.01
vehicles = 40
warmup = 30.0
[sim]
warmup = 20.0
collection = 10.0
)";

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "nde_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    cfg_ = parse_config(kTiny);
    std::ostringstream log;
    ASSERT_EQ(gen_data(cfg_, {(dir_ / "a.csv").string(), std::nullopt, std::nullopt}, log), kOk);
    ASSERT_EQ(build_models(cfg_, {(dir_ / "a.csv").string(), (dir_ / "models").string()}, log), kOk);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static fs::path dir_;
  static Config cfg_;
};

fs::path CliPipeline::dir_;
Config CliPipeline::cfg_;

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const Config d = parse_config("");
  EXPECT_EQ(d.seed, 1u);
  EXPECT_EQ(d.sim.road.lanes, 3);
  const Config c = parse_config("[run]\nseed = 9\n[refine]\nobjective = \"frobenius\"\nconstraint = \"soft\"\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.refine.objective, refine::Objective::SquaredFrobenius);
  EXPECT_EQ(c.refine.constraint, refine::ConstraintMode::Soft);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("[run]\nsede = 3\n"), UsageError);
  EXPECT_THROW(parse_config("[nonsense]\n"), UsageError);
  EXPECT_THROW(parse_config("[run]\nseed = \"x\"\n"), UsageError);
  EXPECT_THROW(parse_config("[refine]\nobjective = \"l2\"\n"), UsageError);
  EXPECT_THROW(parse_config("[run\n"), UsageError);
  EXPECT_THROW(load_config(std::string("/nonexistent/nde.toml")), UsageError);
}

TEST(Config, HashIgnoresSeedButTracksSettings) {
  const auto a = parse_config("[run]\nseed = 1\n");
  const auto b = parse_config("[run]\nseed = 2\nworkers = 4\n");
  const auto c = parse_config("[sim]\ncollection = 301.0\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, EnvironmentVariableIsUsed) {
  const fs::path p = fs::temp_directory_path() / "nde_env_config.toml";
  std::ofstream(p) << "[run]\nseed = 31\n";
  ::setenv(kConfigEnvVar, p.c_str(), 1);
  EXPECT_EQ(load_config(std::nullopt).seed, 31u);
  EXPECT_EQ(load_config(std::string(p)).seed, 31u);
  ::unsetenv(kConfigEnvVar);
  EXPECT_EQ(load_config(std::nullopt).seed, 1u);
  fs::remove(p);
}

TEST_F(CliPipeline, GenDataIsDeterministicWithExactRowCount) {
  std::ostringstream log;
  const auto b = dir_ / "b.csv";
  ASSERT_EQ(gen_data(cfg_, {b.string(), std::nullopt, std::nullopt}, log), kOk);
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(b));
  EXPECT_EQ(data_rows(b), 360u * 40u);
  const auto text = slurp(b);
  EXPECT_NE(text.find(config_hash(cfg_)), std::string::npos);
  EXPECT_THROW(gen_data(cfg_, {b.string(), 0.0, std::nullopt}, log), UsageError);
  ASSERT_EQ(gen_data(cfg_, {b.string(), std::nullopt, 8}, log), kOk);
  EXPECT_NE(slurp(dir_ / "a.csv"), slurp(b));
}

TEST_F(CliPipeline, BuildWritesModelsAndIsDeterministic) {
  const auto m = dir_ / "models";
  for (auto s : kAllSituations) EXPECT_TRUE(fs::exists(m / empirical::model_file_name(s)));
  EXPECT_TRUE(fs::exists(m / "targets.csv"));
  const auto cov = json::parse(slurp(m / "coverage.json"));
  EXPECT_EQ(cov["provenance"]["config_hash"], config_hash(cfg_));
  EXPECT_EQ(cov["provenance"]["seed"], 7);
  EXPECT_EQ(cov["situations"].size(), 6u);
  EXPECT_EQ(cov["records"], 360 * 40);
  std::ostringstream log;
  const auto m2 = dir_ / "models2";
  ASSERT_EQ(build_models(cfg_, {(dir_ / "a.csv").string(), m2.string()}, log), kOk);
  for (const auto& e : fs::directory_iterator(m)) {
    EXPECT_EQ(slurp(e.path()), slurp(m2 / e.path().filename())) << e.path();
  }
}

TEST_F(CliPipeline, BuildRejectsEmptyInput) {
  std::ostringstream log;
  const auto empty = dir_ / "empty.csv";
  std::ofstream(empty).close();
  try {
    build_models(cfg_, {empty.string(), (dir_ / "none").string()}, log);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("no segments"), std::string::npos);
  }
  EXPECT_THROW(build_models(cfg_, {(dir_ / "missing.csv").string(), (dir_ / "none").string()}, log),
               UsageError);
}

TEST_F(CliPipeline, RefineAndSimulate) {
  std::ostringstream log;
  const auto r = dir_ / "refined";
  ASSERT_EQ(refine_models(cfg_, {(dir_ / "models").string(), "", r.string(), std::nullopt}, log), kOk);
  const auto rep = json::parse(slurp(r / "refine_report.json"));
  EXPECT_EQ(rep["config_hash"], config_hash(cfg_));
  EXPECT_EQ(rep["free_driving"]["solver_status"], "optimal");
  EXPECT_LE(rep["free_driving"]["stationarity_residual"].get<double>(), 1e-6);
  EXPECT_LE(rep["free_driving"]["stationary_hellinger"].get<double>(), 1e-3);

  SimulateOptions o;
  o.models_dir = r.string();
  o.out_dir = (dir_ / "nde1").string();
  o.episodes = 2;
  o.workers = 1;
  ASSERT_EQ(simulate(cfg_, o, log), kOk);
  const auto m = json::parse(slurp(dir_ / "nde1" / "metrics.json"));
  EXPECT_EQ(m["config_hash"], config_hash(cfg_));
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["road"]["boundary"], "periodic ring");
  EXPECT_GT(m["vehicle_steps"].get<std::uint64_t>(), 0u);
  EXPECT_TRUE(m.contains("velocity_hellinger"));
  EXPECT_NE(slurp(dir_ / "nde1" / "velocity.csv").find(config_hash(cfg_)), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "nde1" / "range.csv"));

  o.out_dir = (dir_ / "nde2").string();
  o.workers = 2;
  ASSERT_EQ(simulate(cfg_, o, log), kOk);
  for (const char* f : {"metrics.json", "velocity.csv", "range.csv"}) {
    EXPECT_EQ(slurp(dir_ / "nde1" / f), slurp(dir_ / "nde2" / f)) << f;
  }

  o.mode = SimMode::Av;
  o.episodes = 3;
  o.out_dir = (dir_ / "av").string();
  ASSERT_EQ(simulate(cfg_, o, log), kOk);
  const auto a = json::parse(slurp(dir_ / "av" / "accidents.json"));
  EXPECT_EQ(a["episodes"], 3);
  EXPECT_EQ(a["seed"], 7);
  EXPECT_EQ(a["config_hash"], config_hash(cfg_));
  EXPECT_EQ(data_rows(dir_ / "av" / "episodes.csv"), 3u);

  o.episodes = 0;
  EXPECT_THROW(simulate(cfg_, o, log), UsageError);
}

TEST(CliRefine, HardInfeasibleExitsWithThree) {
  // Coarse grid: range 6 m closing at 6 m/s always lands in a crash bin.
  GridConfig g;
  g.speed_min = 20.0;
  g.speed_max = 22.0;
  g.range_max = 8.0;
  g.range_resolution = 4.0;
  g.range_rate_min = -9.0;
  g.range_rate_max = 9.0;
  g.range_rate_resolution = 6.0;
  ModelSet set;
  for (auto s : kAllSituations) set.models.emplace(s, BehaviorModel(s, make_grid(s, g)));
  auto& cf = set.get(Situation::CarFollowing);
  const markov::CarFollowingKernel k(cf.grid(), 1.0);
  for (std::uint64_t s = 0; s < cf.num_states(); ++s) {
    if (k.absorbing(s)) cf.set_row(s, ActionPmf{}, 0, RowStatus::CrashExcluded);
  }
  const fs::path dir = fs::temp_directory_path() / "nde_cli_infeasible";
  fs::remove_all(dir);
  empirical::write_model_set(dir / "in", set);
  empirical::write_targets(dir / "in" / "targets.csv", empirical::Targets(g));
  Config cfg = parse_config("[refine]\ncar_following = true\n");
  std::ostringstream log;
  EXPECT_EQ(refine_models(cfg, {(dir / "in").string(), "", (dir / "out").string(), std::nullopt}, log),
            kInfeasible);
  const auto rep = json::parse(slurp(dir / "out" / "refine_report.json"));
  EXPECT_TRUE(rep.contains("error"));
  cfg = parse_config("[refine]\ncar_following = true\nconstraint = \"soft\"\n");
  EXPECT_EQ(refine_models(cfg, {(dir / "in").string(), "", (dir / "out").string(), std::nullopt}, log), kOk);
  fs::remove_all(dir);
}

TEST(Config, ExampleFileMatchesDefaults) {
  const Config c = load_config(std::string(NDE_SOURCE_DIR "/docs/config.example.toml"));
  const Config d = parse_config("");
  EXPECT_EQ(config_json(c), config_json(d));
  EXPECT_EQ(c.seed, d.seed);
  EXPECT_EQ(c.workers, d.workers);
}
