#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "json.hpp"
#include "toml.hpp"

#include "nde/core/situation.hpp"
#include "nde/empirical/smooth.hpp"
#include "nde/metrics/accident.hpp"
#include "nde/ndd/categorize.hpp"
#include "nde/ndd/synthetic.hpp"
#include "nde/refine/refine.hpp"
#include "nde/sim/config.hpp"

namespace nde::cli {

inline constexpr const char* kConfigEnvVar = "NDE_CONFIG";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RefineSettings {
  refine::Objective objective = refine::Objective::L1;
  refine::ConstraintMode constraint = refine::ConstraintMode::Hard;
  double lambda = 100.0;
  bool car_following = false;
  double max_lp_cells = 6.0e7;
  std::uint64_t max_iters = 200000;
};

struct MetricsSettings {
  double confidence = 0.9;
  metrics::CiMethod ci = metrics::CiMethod::Normal;
};

/// Everything a run depends on. Defaults reproduce the desk-scale setup.
struct Config {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  GridConfig grid;
  ndd::SegmentConfig segment;
  ndd::LaneChangeDetectorConfig lane_change;
  empirical::SmoothingConfig smoothing;
  double max_brake = 4.0;
  double dt_mc = 1.0;
  RefineSettings refine;
  sim::SimConfig sim;
  ndd::GeneratorConfig generator;
  double hours = 1.0;
  ndd::GroundTruthSpec truth;
  MetricsSettings metrics;

  ndd::PipelineConfig pipeline() const {
    ndd::PipelineConfig p;
    p.segment = segment;
    p.lane_change = lane_change;
    p.grid = grid;
    return p;
  }
};

namespace detail {

template <class T>
void read(const toml::table& t, const char* key, T& out) {
  const toml::node* n = t.get(key);
  if (n == nullptr) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = n->value<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = n->value<std::string>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = n->value<double>()) {
      out = *v;
      return;
    }
  } else {
    if (auto v = n->value<std::int64_t>()) {
      if (*v < 0 && std::is_unsigned_v<T>) throw UsageError(std::string("config key '") + key + "' must be >= 0");
      out = static_cast<T>(*v);
      return;
    }
  }
  throw UsageError(std::string("config key '") + key + "' has the wrong type");
}

inline const toml::table* section(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (n == nullptr) return nullptr;
  if (!n->is_table()) throw UsageError(std::string("config section [") + name + "] is not a table");
  return n->as_table();
}

inline void check_keys(const toml::table& t, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [k, v] : t) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k.str() == a;
    if (!ok) throw UsageError("unknown config key '" + std::string(k.str()) + "' in " + where);
  }
}

inline refine::Objective objective_from_string(const std::string& s) {
  if (s == "l1") return refine::Objective::L1;
  if (s == "frobenius" || s == "squared_frobenius") return refine::Objective::SquaredFrobenius;
  throw UsageError("objective must be 'l1' or 'frobenius', got '" + s + "'");
}

inline refine::ConstraintMode constraint_from_string(const std::string& s) {
  if (s == "hard") return refine::ConstraintMode::Hard;
  if (s == "soft") return refine::ConstraintMode::Soft;
  throw UsageError("constraint must be 'hard' or 'soft', got '" + s + "'");
}

inline metrics::CiMethod ci_from_string(const std::string& s) {
  if (s == "normal") return metrics::CiMethod::Normal;
  if (s == "clopper-pearson") return metrics::CiMethod::ClopperPearson;
  throw UsageError("ci must be 'normal' or 'clopper-pearson', got '" + s + "'");
}

}  // namespace detail

inline Config config_from_toml(const toml::table& root) {
  using detail::check_keys;
  using detail::read;
  using detail::section;
  Config c;
  check_keys(root, {"run", "grid", "ndd", "empirical", "markov", "refine", "sim", "gen", "truth", "metrics"},
             "top level");
  if (const auto* t = section(root, "run")) {
    check_keys(*t, {"seed", "workers"}, "[run]");
    read(*t, "seed", c.seed);
    read(*t, "workers", c.workers);
  }
  if (const auto* t = section(root, "grid")) {
    check_keys(*t, {"speed_min", "speed_max", "free_speed_resolution", "speed_resolution", "range_max",
                    "range_resolution", "range_rate_min", "range_rate_max", "range_rate_resolution"},
               "[grid]");
    auto& g = c.grid;
    read(*t, "speed_min", g.speed_min);
    read(*t, "speed_max", g.speed_max);
    read(*t, "free_speed_resolution", g.free_speed_resolution);
    read(*t, "speed_resolution", g.speed_resolution);
    read(*t, "range_max", g.range_max);
    read(*t, "range_resolution", g.range_resolution);
    read(*t, "range_rate_min", g.range_rate_min);
    read(*t, "range_rate_max", g.range_rate_max);
    read(*t, "range_rate_resolution", g.range_rate_resolution);
  }
  if (const auto* t = section(root, "ndd")) {
    check_keys(*t, {"max_gap", "min_duration", "sample_period", "max_speed_jump", "lane_width",
                    "slope_threshold", "min_run", "jump_fraction"},
               "[ndd]");
    read(*t, "max_gap", c.segment.max_gap);
    read(*t, "min_duration", c.segment.min_duration);
    read(*t, "sample_period", c.segment.sample_period);
    read(*t, "max_speed_jump", c.segment.max_speed_jump);
    read(*t, "lane_width", c.lane_change.lane_width);
    read(*t, "slope_threshold", c.lane_change.slope_threshold);
    read(*t, "min_run", c.lane_change.min_run);
    read(*t, "jump_fraction", c.lane_change.jump_fraction);
  }
  if (const auto* t = section(root, "empirical")) {
    check_keys(*t, {"window", "min_samples", "max_brake"}, "[empirical]");
    read(*t, "window", c.smoothing.window);
    read(*t, "min_samples", c.smoothing.min_samples);
    read(*t, "max_brake", c.max_brake);
  }
  if (const auto* t = section(root, "markov")) {
    check_keys(*t, {"dt_mc"}, "[markov]");
    read(*t, "dt_mc", c.dt_mc);
  }
  if (const auto* t = section(root, "refine")) {
    check_keys(*t, {"objective", "constraint", "lambda", "car_following", "max_lp_cells", "max_iters"},
               "[refine]");
    std::string s;
    read(*t, "objective", s);
    if (!s.empty()) c.refine.objective = detail::objective_from_string(s);
    s.clear();
    read(*t, "constraint", s);
    if (!s.empty()) c.refine.constraint = detail::constraint_from_string(s);
    read(*t, "lambda", c.refine.lambda);
    read(*t, "car_following", c.refine.car_following);
    read(*t, "max_lp_cells", c.refine.max_lp_cells);
    read(*t, "max_iters", c.refine.max_iters);
  }
  if (const auto* t = section(root, "sim")) {
    check_keys(*t, {"lanes", "length", "lane_width", "vehicle_length", "dt", "lc_duration", "speed_min",
                    "speed_max", "idm_sigma", "warmup", "collection", "av_distance", "av_max_time", "idm",
                    "mobil", "init"},
               "[sim]");
    auto& s = c.sim;
    read(*t, "lanes", s.road.lanes);
    read(*t, "length", s.road.length);
    read(*t, "lane_width", s.road.lane_width);
    read(*t, "vehicle_length", s.road.vehicle_length);
    read(*t, "dt", s.dt);
    read(*t, "lc_duration", s.lc_duration);
    read(*t, "speed_min", s.speed_min);
    read(*t, "speed_max", s.speed_max);
    read(*t, "idm_sigma", s.idm_sigma);
    read(*t, "warmup", s.warmup);
    read(*t, "collection", s.collection);
    read(*t, "av_distance", s.av_distance);
    read(*t, "av_max_time", s.av_max_time);
    if (const auto* i = section(*t, "idm")) {
      check_keys(*i, {"a_max", "v0", "delta", "b", "s0", "T"}, "[sim.idm]");
      read(*i, "a_max", s.idm.a_max);
      read(*i, "v0", s.idm.v0);
      read(*i, "delta", s.idm.delta);
      read(*i, "b", s.idm.b);
      read(*i, "s0", s.idm.s0);
      read(*i, "T", s.idm.T);
    }
    if (const auto* m = section(*t, "mobil")) {
      check_keys(*m, {"politeness", "threshold", "safe_decel"}, "[sim.mobil]");
      read(*m, "politeness", s.mobil.politeness);
      read(*m, "threshold", s.mobil.threshold);
      read(*m, "safe_decel", s.mobil.safe_decel);
    }
    if (const auto* i = section(*t, "init")) {
      check_keys(*i, {"d0", "p_cf", "d_obs", "resample_limit"}, "[sim.init]");
      read(*i, "d0", s.init.d0);
      read(*i, "p_cf", s.init.p_cf);
      read(*i, "d_obs", s.init.d_obs);
      read(*i, "resample_limit", s.init.resample_limit);
    }
  }
  if (const auto* t = section(root, "gen")) {
    check_keys(*t, {"hours", "vehicles", "chunk_seconds", "warmup", "v_lo", "v_hi"}, "[gen]");
    read(*t, "hours", c.hours);
    read(*t, "vehicles", c.generator.vehicles);
    read(*t, "chunk_seconds", c.generator.chunk_seconds);
    read(*t, "warmup", c.generator.warmup);
    read(*t, "v_lo", c.generator.v_lo);
    read(*t, "v_hi", c.generator.v_hi);
  }
  if (const auto* t = section(root, "truth")) {
    check_keys(*t, {"sigma_narrow", "sigma_wide", "wide_weight", "lc_scale", "lc_max", "base_free",
                    "base_one_adjacent", "base_cut_in", "base_two_adjacent", "right_bias"},
               "[truth]");
    auto& g = c.truth;
    read(*t, "sigma_narrow", g.sigma_narrow);
    read(*t, "sigma_wide", g.sigma_wide);
    read(*t, "wide_weight", g.wide_weight);
    read(*t, "lc_scale", g.lc_scale);
    read(*t, "lc_max", g.lc_max);
    read(*t, "base_free", g.base_free);
    read(*t, "base_one_adjacent", g.base_one_adjacent);
    read(*t, "base_cut_in", g.base_cut_in);
    read(*t, "base_two_adjacent", g.base_two_adjacent);
    read(*t, "right_bias", g.right_bias);
  }
  if (const auto* t = section(root, "metrics")) {
    check_keys(*t, {"confidence", "ci"}, "[metrics]");
    read(*t, "confidence", c.metrics.confidence);
    std::string s;
    read(*t, "ci", s);
    if (!s.empty()) c.metrics.ci = detail::ci_from_string(s);
  }
  c.sim.grid = c.grid;
  c.generator.sim = c.sim;
  try {
    c.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

inline Config parse_config(const std::string& text, const std::string& where = "config") {
  try {
    return config_from_toml(toml::parse(text, where));
  } catch (const toml::parse_error& e) {
    throw UsageError(fmt::format("{}: {} (line {})", where, std::string(e.description()),
                                 e.source().begin.line));
  }
}

/// Explicit path, then $NDE_CONFIG, then built-in defaults.
inline Config load_config(const std::optional<std::string>& path) {
  std::optional<std::string> p = path;
  if (!p) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') p = env;
  }
  if (!p) return config_from_toml(toml::table{});
  if (!std::filesystem::exists(*p)) throw UsageError("config file '" + *p + "' does not exist");
  try {
    return config_from_toml(toml::parse_file(*p));
  } catch (const toml::parse_error& e) {
    throw UsageError(fmt::format("{}: {} (line {})", *p, std::string(e.description()),
                                 e.source().begin.line));
  }
}

/// Resolved configuration as JSON (run seed and worker count excluded, so
/// the hash identifies the experiment rather than the invocation).
inline nlohmann::json config_json(const Config& c) {
  nlohmann::json j;
  const auto& g = c.grid;
  j["grid"] = {{"speed_min", g.speed_min},
               {"speed_max", g.speed_max},
               {"free_speed_resolution", g.free_speed_resolution},
               {"speed_resolution", g.speed_resolution},
               {"range_max", g.range_max},
               {"range_resolution", g.range_resolution},
               {"range_rate_min", g.range_rate_min},
               {"range_rate_max", g.range_rate_max},
               {"range_rate_resolution", g.range_rate_resolution}};
  j["ndd"] = {{"max_gap", c.segment.max_gap},
              {"min_duration", c.segment.min_duration},
              {"sample_period", c.segment.sample_period},
              {"max_speed_jump", c.segment.max_speed_jump},
              {"lane_width", c.lane_change.lane_width},
              {"slope_threshold", c.lane_change.slope_threshold},
              {"min_run", c.lane_change.min_run},
              {"jump_fraction", c.lane_change.jump_fraction}};
  j["empirical"] = {{"window", c.smoothing.window},
                    {"min_samples", c.smoothing.min_samples},
                    {"max_brake", c.max_brake}};
  j["markov"] = {{"dt_mc", c.dt_mc}};
  j["refine"] = {{"objective", refine::to_string(c.refine.objective)},
                 {"constraint", refine::to_string(c.refine.constraint)},
                 {"lambda", c.refine.lambda},
                 {"car_following", c.refine.car_following},
                 {"max_lp_cells", c.refine.max_lp_cells},
                 {"max_iters", c.refine.max_iters}};
  const auto& s = c.sim;
  j["sim"] = {{"lanes", s.road.lanes},
              {"length", s.road.length},
              {"lane_width", s.road.lane_width},
              {"vehicle_length", s.road.vehicle_length},
              {"periodic", s.road.periodic},
              {"dt", s.dt},
              {"lc_duration", s.lc_duration},
              {"speed_min", s.speed_min},
              {"speed_max", s.speed_max},
              {"idm_sigma", s.idm_sigma},
              {"warmup", s.warmup},
              {"collection", s.collection},
              {"av_distance", s.av_distance},
              {"av_max_time", s.av_max_time},
              {"idm",
               {{"a_max", s.idm.a_max},
                {"v0", s.idm.v0},
                {"delta", s.idm.delta},
                {"b", s.idm.b},
                {"s0", s.idm.s0},
                {"T", s.idm.T}}},
              {"mobil",
               {{"politeness", s.mobil.politeness},
                {"threshold", s.mobil.threshold},
                {"safe_decel", s.mobil.safe_decel}}},
              {"init",
               {{"d0", s.init.d0},
                {"p_cf", s.init.p_cf},
                {"d_obs", s.init.d_obs},
                {"resample_limit", s.init.resample_limit}}}};
  j["gen"] = {{"hours", c.hours},
              {"vehicles", c.generator.vehicles},
              {"chunk_seconds", c.generator.chunk_seconds},
              {"warmup", c.generator.warmup},
              {"v_lo", c.generator.v_lo},
              {"v_hi", c.generator.v_hi}};
  const auto& t = c.truth;
  j["truth"] = {{"sigma_narrow", t.sigma_narrow},
                {"sigma_wide", t.sigma_wide},
                {"wide_weight", t.wide_weight},
                {"lc_scale", t.lc_scale},
                {"lc_max", t.lc_max},
                {"base_free", t.base_free},
                {"base_one_adjacent", t.base_one_adjacent},
                {"base_cut_in", t.base_cut_in},
                {"base_two_adjacent", t.base_two_adjacent},
                {"right_bias", t.right_bias}};
  j["metrics"] = {{"confidence", c.metrics.confidence}, {"ci", metrics::to_string(c.metrics.ci)}};
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const Config& c) {
  return fmt::format("{:016x}", fnv1a64(config_json(c).dump()));
}

}  // namespace nde::cli
