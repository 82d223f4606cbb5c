#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "nde/cli/config.hpp"
#include "nde/empirical/builder.hpp"
#include "nde/empirical/serialize.hpp"
#include "nde/empirical/targets.hpp"
#include "nde/metrics/accident.hpp"
#include "nde/metrics/hellinger.hpp"
#include "nde/metrics/traffic.hpp"
#include "nde/ndd/csv.hpp"
#include "nde/ndd/synthetic.hpp"
#include "nde/refine/refine.hpp"
#include "nde/sim/init.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/runner.hpp"

namespace nde::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kInfeasible = 3 };

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

inline void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// "# key: value" lines, then the CSV header.
inline std::string csv_preamble(const json& meta, const char* header) {
  std::string out;
  for (const auto& [k, v] : meta.items()) {
    out += "# " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  }
  out += header;
  out += "\n";
  return out;
}

inline std::string histogram_csv(const Histogram& h, const json& meta) {
  std::string out = csv_preamble(meta, "bin_low,bin_high,count,normalized");
  const auto p = h.normalized();
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out += fmt::format("{},{},{},{}\n", h.edges[i], h.edges[i + 1], h.counts[i], p[i]);
  }
  return out;
}

// Range marginal of the car-following joint, crash bins included.
inline std::vector<double> range_marginal(const empirical::Targets& t) {
  const StateGrid g = make_grid(Situation::CarFollowing, t.grid);
  const auto rb = g.axis(1).bins();
  const auto rrb = g.axis(2).bins();
  std::vector<double> m(rb, 0.0);
  double total = 0.0;
  for (std::uint64_t s = 0; s < t.cf_joint.size(); ++s) {
    const auto c = static_cast<double>(t.cf_joint[s]);
    m[(s / rrb) % rb] += c;
    total += c;
  }
  if (total > 0.0) {
    for (auto& x : m) x /= total;
  }
  return m;
}

inline json histogram_distance(const Histogram& sim, const std::vector<double>& target) {
  if (sim.bins() != target.size() || sim.total() == 0) return nullptr;
  double tsum = 0.0;
  for (double x : target) tsum += x;
  if (!(tsum > 0.0)) return nullptr;
  return metrics::hellinger(sim.normalized(), target);
}

inline std::string metadata_value(const std::vector<std::pair<std::string, std::string>>& meta,
                                  const std::string& key) {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return {};
}

inline void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw UsageError(std::string(what) + " '" + p.string() + "' does not exist");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string out;
  std::optional<double> hours;
  std::optional<std::uint64_t> seed;
};

inline int gen_data(const Config& cfg, const GenDataOptions& o, std::ostream& log) {
  const double hours = o.hours.value_or(cfg.hours);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  if (!(hours > 0.0)) throw UsageError("--hours must be positive");
  const ndd::GroundTruth truth(cfg.truth, cfg.grid);
  ndd::TrajectoryCsvWriter writer(
      o.out, {{"generator", "synthetic ring road"},
              {"config_hash", config_hash(cfg)},
              {"seed", std::to_string(seed)},
              {"hours", fmt::format("{}", hours)},
              {"vehicles", std::to_string(cfg.generator.vehicles)}});
  const auto st = ndd::generate_synthetic_ndd(
      truth, cfg.generator, hours, seed,
      [&](std::vector<ndd::TrajectoryRecord>&& rows) { writer.write(rows); });
  writer.close();
  log << fmt::format("gen-data: {} rows, {} chunks, {} lane changes, {} respawns -> {}\n", st.rows,
                     st.chunks, st.lane_changes, st.respawns, o.out);
  return kOk;
}

// ---------------------------------------------------------------------------
// build-models

struct BuildOptions {
  std::string input;
  std::string out_dir;
  std::size_t batch_records = 1u << 20;
};

inline json coverage_json(const std::vector<empirical::CoverageSummary>& cov) {
  json arr = json::array();
  for (const auto& c : cov) {
    arr.push_back({{"situation", to_string(c.situation)},
                   {"grid_states", c.grid_states},
                   {"observed_states", c.observed_states},
                   {"covered_states", c.covered_states},
                   {"crash_states", c.crash_states},
                   {"samples", c.samples},
                   {"covered_samples", c.covered_samples}});
  }
  return arr;
}

inline int build_models(const Config& cfg, const BuildOptions& o, std::ostream& log) {
  detail::require_file(o.input, "input");
  if (fs::file_size(o.input) == 0) throw std::runtime_error("no segments in '" + o.input + "' (empty file)");
  ndd::TrajectoryCsvReader reader(o.input);
  empirical::ModelBuilder builder(cfg.pipeline());

  // Batches end at a vehicle boundary so no trajectory is split.
  std::vector<ndd::TrajectoryRecord> batch;
  batch.reserve(o.batch_records + 4096);
  ndd::TrajectoryRecord r;
  while (reader.next(r)) {
    if (batch.size() >= o.batch_records && r.vehicle_id != batch.back().vehicle_id) {
      builder.add_records(batch);
      batch.clear();
    }
    batch.push_back(r);
  }
  if (!batch.empty()) builder.add_records(batch);
  if (builder.stats().segments == 0) {
    throw std::runtime_error("no segments in '" + o.input + "'; nothing to build");
  }

  auto res = builder.finish(cfg.smoothing, cfg.max_brake);
  const json prov = {{"config_hash", config_hash(cfg)},
                     {"seed", cfg.seed},
                     {"input_config_hash", detail::metadata_value(reader.metadata(), "config_hash")},
                     {"input_seed", detail::metadata_value(reader.metadata(), "seed")},
                     {"window", cfg.smoothing.window},
                     {"min_samples", cfg.smoothing.min_samples}};
  const fs::path dir(o.out_dir);
  empirical::write_model_set(dir, res.models, prov);
  empirical::write_targets(dir / "targets.csv", res.targets, prov);
  const auto& st = res.stats;
  detail::write_json(dir / "coverage.json",
                     {{"provenance", prov},
                      {"records", st.records},
                      {"segments", st.segments},
                      {"segmented_records", st.segmented_records},
                      {"lane_changes", st.lane_changes},
                      {"samples", st.samples},
                      {"situations", coverage_json(res.coverage)}});
  log << fmt::format("build-models: {} records, {} segments, {} lane changes, {} samples -> {}\n",
                     st.records, st.segments, st.lane_changes, st.samples, o.out_dir);
  for (const auto& c : res.coverage) {
    log << fmt::format("  {:<22} {:>9} observed {:>7} covered {:>11} samples\n", to_string(c.situation),
                       c.observed_states, c.covered_states, c.samples);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// refine

struct RefineOptions {
  std::string models_dir;
  std::string targets;  // defaults to <models_dir>/targets.csv
  std::string out_dir;
  std::optional<bool> car_following;
};

inline json report_json(const refine::RefinementReport& r, std::size_t filled) {
  json j = {{"objective_mode", r.objective_mode},
            {"constraint_mode", r.constraint_mode},
            {"lambda", r.lambda},
            {"objective", r.objective},
            {"stationarity_residual", r.stationarity_residual},
            {"empirical_residual", r.empirical_residual},
            {"iterations", r.iterations},
            {"solver_status", r.solver_status},
            {"variables", r.variables},
            {"constraints", r.constraints},
            {"filled_rows", filled}};
  j["stationary_l1"] = r.stationary_l1 ? json(*r.stationary_l1) : json(nullptr);
  j["stationary_hellinger"] = r.stationary_hellinger ? json(*r.stationary_hellinger) : json(nullptr);
  j["empirical_stationary_hellinger"] =
      r.empirical_stationary_hellinger ? json(*r.empirical_stationary_hellinger) : json(nullptr);
  return j;
}

inline int refine_models(const Config& cfg, const RefineOptions& o, std::ostream& log) {
  const fs::path in_dir(o.models_dir);
  const fs::path targets_path = o.targets.empty() ? in_dir / "targets.csv" : fs::path(o.targets);
  detail::require_file(in_dir, "models directory");
  detail::require_file(targets_path, "targets file");
  ModelSet set = empirical::read_model_set(in_dir);
  const auto targets = empirical::read_targets(targets_path);
  const bool do_cf = o.car_following.value_or(cfg.refine.car_following);

  auto problem = [&](const BehaviorModel& m, std::vector<double> pi) {
    refine::RefinementProblem pr;
    pr.f_star = m;
    pr.pi_star = std::move(pi);
    pr.objective = cfg.refine.objective;
    pr.constraint = cfg.refine.constraint;
    pr.lambda = cfg.refine.lambda;
    pr.dt_mc = cfg.dt_mc;
    pr.max_brake = cfg.max_brake;
    pr.max_lp_cells = cfg.refine.max_lp_cells;
    pr.max_iters = cfg.refine.max_iters;
    return pr;
  };

  json report = {{"config_hash", config_hash(cfg)},
                 {"seed", cfg.seed},
                 {"dt_mc", cfg.dt_mc},
                 {"off_grid_successors", "clamped to the grid, split between bracketing bin centres"}};
  try {
    BehaviorModel& fd = set.get(Situation::FreeDriving);
    const std::size_t filled = sim::fill_with_fallback(fd, cfg.sim);
    auto res = refine::refine_free_driving(problem(fd, empirical::free_driving_target(targets)));
    fd = std::move(res.model);
    report["free_driving"] = report_json(res.report, filled);
    log << fmt::format("refine: free driving {} ({} filled rows, objective {:.6g}, residual {:.3g})\n",
                       res.report.solver_status, filled, res.report.objective,
                       res.report.stationarity_residual);
    if (do_cf) {
      BehaviorModel& cf = set.get(Situation::CarFollowing);
      const std::size_t cf_filled = sim::fill_with_fallback(cf, cfg.sim);
      auto cres = refine::refine_car_following(
          problem(cf, empirical::car_following_target(targets, cfg.max_brake)));
      cf = std::move(cres.model);
      report["car_following"] = report_json(cres.report, cf_filled);
      log << fmt::format("refine: car following {} ({} filled rows)\n", cres.report.solver_status,
                         cf_filled);
    } else {
      report["car_following"] = nullptr;
    }
  } catch (const refine::InfeasibleRefinement& e) {
    report["error"] = e.what();
    detail::write_json(fs::path(o.out_dir) / "refine_report.json", report);
    log << "refine: infeasible: " << e.what() << "\n";
    return kInfeasible;
  }

  const json prov = {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}, {"refined", true}};
  empirical::write_model_set(o.out_dir, set, prov);
  empirical::write_targets(fs::path(o.out_dir) / "targets.csv", targets, prov);
  detail::write_json(fs::path(o.out_dir) / "refine_report.json", report);
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

enum class SimMode { Nde, Av };

inline json road_json(const sim::SimConfig& c) {
  return {{"boundary", c.road.periodic ? "periodic ring" : "open"},
          {"length", c.road.length},
          {"lanes", c.road.lanes}};
}

struct SimulateOptions {
  std::string models_dir;
  std::string targets;  // defaults to <models_dir>/targets.csv
  std::string out_dir;
  SimMode mode = SimMode::Nde;
  sim::Environment environment = sim::Environment::Nde;
  std::size_t episodes = 10;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

inline int simulate(const Config& cfg, const SimulateOptions& o, std::ostream& log) {
  if (o.episodes == 0) throw UsageError("--episodes must be positive");
  const fs::path in_dir(o.models_dir);
  const fs::path targets_path = o.targets.empty() ? in_dir / "targets.csv" : fs::path(o.targets);
  detail::require_file(in_dir, "models directory");
  detail::require_file(targets_path, "targets file");
  const ModelSet set = empirical::read_model_set(in_dir);
  const auto targets = empirical::read_targets(targets_path);
  const sim::ModelSetSource source(set);
  const auto init = sim::distributions_from_targets(targets);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  const unsigned workers = o.workers.value_or(cfg.workers);
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  const json meta = {{"config_hash", config_hash(cfg)}, {"seed", seed}, {"road", road_json(cfg.sim)}};

  if (o.mode == SimMode::Nde) {
    const auto stats = sim::run_traffic_episodes(cfg.sim, source, init, o.episodes, seed, workers);
    detail::write_text(out / "velocity.csv", detail::histogram_csv(stats.velocity, meta));
    detail::write_text(out / "range.csv", detail::histogram_csv(stats.range, meta));
    std::vector<double> speed_target(targets.speed_all.begin(), targets.speed_all.end());
    double s = 0.0;
    for (double x : speed_target) s += x;
    if (s > 0.0) {
      for (auto& x : speed_target) x /= s;
    }
    const auto lc = metrics::lane_change_rate(stats.vehicle_km, stats.lane_changes);
    const json m = {{"config_hash", config_hash(cfg)},
                    {"seed", seed},
                    {"road", meta["road"]},
                    {"episodes", o.episodes},
                    {"vehicle_km", stats.vehicle_km},
                    {"vehicle_hours", stats.vehicle_hours},
                    {"vehicle_steps", stats.vehicle_steps},
                    {"lane_changes", stats.lane_changes},
                    {"km_per_lane_change", detail::finite_or_null(lc.km_per_lane_change)},
                    {"collisions", stats.collisions},
                    {"velocity_hellinger", detail::histogram_distance(stats.velocity, speed_target)},
                    {"range_hellinger",
                     detail::histogram_distance(stats.range, detail::range_marginal(targets))}};
    detail::write_json(out / "metrics.json", m);
    log << fmt::format("simulate nde: {} episodes, {:.1f} veh-h, {} lane changes, {} collisions\n",
                       o.episodes, stats.vehicle_hours, stats.lane_changes, stats.collisions);
    return kOk;
  }

  const auto eps = sim::run_av_episodes(cfg.sim, source, init, o.environment, o.episodes, seed, workers);
  std::string csv = detail::csv_preamble(
      meta, "episode,seed,vehicles,accident,type,distance,time,background_collisions");
  std::vector<bool> outcomes;
  json types = {{"rear_end", 0}, {"sideswipe", 0}, {"angle", 0}, {"other", 0}};
  for (const auto& e : eps) {
    const auto& oc = e.outcome;
    outcomes.push_back(oc.accident);
    const char* type = oc.type ? sim::to_string(*oc.type) : "";
    if (oc.type) types[type] = types[type].get<std::uint64_t>() + 1;
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", e.index, e.seed, e.vehicles, oc.accident ? 1 : 0,
                       type, oc.distance, oc.time, oc.background_collisions);
  }
  detail::write_text(out / "episodes.csv", csv);
  std::uint64_t m = 0;
  for (bool b : outcomes) m += b ? 1 : 0;
  const auto rate = metrics::accident_rate(m, outcomes.size(), cfg.metrics.confidence, cfg.metrics.ci);
  detail::write_json(out / "accidents.json", {{"config_hash", config_hash(cfg)},
                                              {"seed", seed},
                                              {"road", meta["road"]},
                                              {"environment", sim::to_string(o.environment)},
                                              {"episodes", rate.n},
                                              {"accidents", rate.m},
                                              {"rate", rate.estimate},
                                              {"ci_low", rate.ci_low},
                                              {"ci_high", rate.ci_high},
                                              {"confidence", rate.confidence},
                                              {"ci_method", metrics::to_string(rate.method)},
                                              {"types", types}});
  log << fmt::format("simulate av ({}): {}/{} accidents, rate {:.4g} [{:.4g}, {:.4g}]\n",
                     sim::to_string(o.environment), rate.m, rate.n, rate.estimate, rate.ci_low,
                     rate.ci_high);
  return kOk;
}

}  // namespace nde::cli
