#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "nde/cli/commands.hpp"

namespace {

template <class T>
std::optional<T> opt(const CLI::Option* o, const T& v) {
  return o->count() > 0 ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nde::cli;
  CLI::App app{"Naturalistic driving environment: data, models, refinement and simulation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "TOML config (default: $NDE_CONFIG, else built-in)");

  GenDataOptions gen;
  double gen_hours = 0.0;
  std::uint64_t gen_seed = 0;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic trajectory dataset");
  g->add_option("-o,--out", gen.out, "Output trajectory CSV")->required();
  auto* g_hours = g->add_option("--hours", gen_hours, "Hours of data (overrides [gen] hours)");
  auto* g_seed = g->add_option("--seed", gen_seed, "Master seed (overrides [run] seed)");

  BuildOptions build;
  auto* b = app.add_subcommand("build-models", "Estimate behaviour models from a trajectory CSV");
  b->add_option("-i,--input", build.input, "Trajectory CSV")->required();
  b->add_option("-o,--out", build.out_dir, "Output model directory")->required();

  RefineOptions ref;
  bool ref_cf = false;
  auto* r = app.add_subcommand("refine", "Refine longitudinal models towards their target distributions");
  r->add_option("-m,--models", ref.models_dir, "Model directory")->required();
  r->add_option("-t,--targets", ref.targets, "Targets CSV (default: <models>/targets.csv)");
  r->add_option("-o,--out", ref.out_dir, "Output model directory")->required();
  auto* r_cf = r->add_flag("--car-following", ref_cf, "Also refine the car-following model");

  SimulateOptions simo;
  std::string mode = "nde";
  std::string env = "nde";
  std::uint64_t sim_seed = 0;
  unsigned sim_workers = 1;
  auto* s = app.add_subcommand("simulate", "Run traffic statistics or AV testing episodes");
  s->add_option("-m,--models", simo.models_dir, "Model directory")->required();
  s->add_option("-t,--targets", simo.targets, "Targets CSV (default: <models>/targets.csv)");
  s->add_option("-o,--out", simo.out_dir, "Output directory")->required();
  s->add_option("--mode", mode, "nde (traffic statistics) or av (AV testing)")
      ->check(CLI::IsMember({"nde", "av"}));
  s->add_option("--environment", env, "Background traffic in av mode: nde or idm")
      ->check(CLI::IsMember({"nde", "idm"}));
  s->add_option("-n,--episodes", simo.episodes, "Number of episodes");
  auto* s_seed = s->add_option("--seed", sim_seed, "Master seed (overrides [run] seed)");
  auto* s_workers =
      s->add_option("-j,--workers", sim_workers, "Worker threads (overrides [run] workers)")
          ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const Config cfg = load_config(config_path.empty() ? std::nullopt : std::optional(config_path));
    if (g->parsed()) {
      gen.hours = opt(g_hours, gen_hours);
      gen.seed = opt(g_seed, gen_seed);
      return gen_data(cfg, gen, std::cerr);
    }
    if (b->parsed()) return build_models(cfg, build, std::cerr);
    if (r->parsed()) {
      ref.car_following = opt(r_cf, ref_cf);
      return refine_models(cfg, ref, std::cerr);
    }
    simo.mode = mode == "av" ? SimMode::Av : SimMode::Nde;
    simo.environment = env == "idm" ? nde::sim::Environment::IdmBaseline : nde::sim::Environment::Nde;
    simo.seed = opt(s_seed, sim_seed);
    simo.workers = opt(s_workers, sim_workers);
    return simulate(cfg, simo, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
