#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "nde/core/behavior_model.hpp"
#include "nde/empirical/targets.hpp"

namespace nde::empirical {

inline constexpr int kModelFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

template <typename T>
T parse(std::string_view f, const std::string& where) {
  T v{};
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || p != f.data() + f.size()) {
    throw FormatError(where + ": bad number '" + std::string(f) + "'");
  }
  return v;
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  return lines;
}

// "# key: value" metadata lines.
inline bool meta(const std::string& line, std::string& key, std::string& value) {
  if (line.rfind("# ", 0) != 0) return false;
  const auto colon = line.find(": ", 2);
  if (colon == std::string::npos) return false;
  key = line.substr(2, colon - 2);
  value = line.substr(colon + 2);
  return true;
}

}  // namespace detail

inline nlohmann::json grid_config_json(const GridConfig& g) {
  return {{"speed_min", g.speed_min},
          {"speed_max", g.speed_max},
          {"free_speed_resolution", g.free_speed_resolution},
          {"speed_resolution", g.speed_resolution},
          {"range_max", g.range_max},
          {"range_resolution", g.range_resolution},
          {"range_rate_min", g.range_rate_min},
          {"range_rate_max", g.range_rate_max},
          {"range_rate_resolution", g.range_rate_resolution}};
}

inline GridConfig grid_config_from_json(const nlohmann::json& j) {
  GridConfig g;
  g.speed_min = j.at("speed_min").get<double>();
  g.speed_max = j.at("speed_max").get<double>();
  g.free_speed_resolution = j.at("free_speed_resolution").get<double>();
  g.speed_resolution = j.at("speed_resolution").get<double>();
  g.range_max = j.at("range_max").get<double>();
  g.range_resolution = j.at("range_resolution").get<double>();
  g.range_rate_min = j.at("range_rate_min").get<double>();
  g.range_rate_max = j.at("range_rate_max").get<double>();
  g.range_rate_resolution = j.at("range_rate_resolution").get<double>();
  return g;
}

inline std::string model_to_string(const BehaviorModel& m, const nlohmann::json& provenance) {
  std::string out;
  auto it = std::back_inserter(out);
  fmt::format_to(it, "# nde-behavior-model: {}\n", kModelFormatVersion);
  fmt::format_to(it, "# situation: {}\n", to_string(m.situation()));
  fmt::format_to(it, "# grid_kind: {}\n", to_string(m.grid().kind()));
  fmt::format_to(it, "# min_samples: {}\n", m.min_samples());
  for (const auto& a : m.grid().axes()) {
    fmt::format_to(it, "# axis: {} {} {} {}\n", a.name, a.min, a.max, a.resolution);
  }
  fmt::format_to(it, "# provenance: {}\n", provenance.dump());
  out += "state,coverage,status";
  for (int a = 0; a < kNumActions; ++a) fmt::format_to(it, ",p{}", a);
  out += '\n';
  for (auto s : m.states()) {
    const auto& r = m.at(s);
    fmt::format_to(it, "{},{},{}", s, r.coverage, to_string(r.status));
    for (double p : r.pmf) fmt::format_to(it, ",{}", p);
    out += '\n';
  }
  return out;
}

struct LoadedModel {
  BehaviorModel model;
  nlohmann::json provenance;
};

inline LoadedModel model_from_lines(const std::vector<std::string>& lines, const std::string& where) {
  std::size_t i = 0;
  std::string key, value;
  int version = -1;
  std::optional<Situation> situation;
  GridKind kind = GridKind::FreeDriving;
  std::uint64_t min_samples = BehaviorModel::kDefaultMinSamples;
  std::vector<Axis> axes;
  nlohmann::json prov = nlohmann::json::object();
  for (; i < lines.size() && detail::meta(lines[i], key, value); ++i) {
    if (key == "nde-behavior-model") {
      version = detail::parse<int>(value, where);
    } else if (key == "situation") {
      situation = situation_from_string(value);
    } else if (key == "grid_kind") {
      if (value == "FreeDriving") kind = GridKind::FreeDriving;
      else if (value == "CarFollowing") kind = GridKind::CarFollowing;
      else if (value == "LaneChangeContext") kind = GridKind::LaneChangeContext;
      else throw FormatError(where + ": unknown grid kind '" + value + "'");
    } else if (key == "min_samples") {
      min_samples = detail::parse<std::uint64_t>(value, where);
    } else if (key == "axis") {
      std::istringstream is(value);
      std::string name;
      std::string lo, hi, res;
      is >> name >> lo >> hi >> res;
      axes.emplace_back(name, detail::parse<double>(lo, where), detail::parse<double>(hi, where),
                        detail::parse<double>(res, where));
    } else if (key == "provenance") {
      prov = nlohmann::json::parse(value);
    }
  }
  if (version != kModelFormatVersion) {
    throw FormatError(where + ": unsupported or missing model format version");
  }
  if (!situation) throw FormatError(where + ": missing situation");
  if (i >= lines.size() || lines[i].rfind("state,coverage,status", 0) != 0) {
    throw FormatError(where + ": missing column header");
  }
  ++i;
  BehaviorModel m(*situation, StateGrid(kind, axes), min_samples);
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 3 + kNumActions) {
      throw FormatError(where + ":" + std::to_string(i + 1) + ": wrong column count");
    }
    ActionPmf p{};
    for (int a = 0; a < kNumActions; ++a) {
      p[static_cast<std::size_t>(a)] = detail::parse<double>(f[3 + static_cast<std::size_t>(a)], where);
    }
    m.set_row(detail::parse<std::uint64_t>(f[0], where), p,
              detail::parse<std::uint64_t>(f[1], where), row_status_from_string(std::string(f[2])));
  }
  return {std::move(m), std::move(prov)};
}

inline std::string model_file_name(Situation s) {
  return std::string(to_string(s)) + ".model.csv";
}

inline void write_model(const std::filesystem::path& path, const BehaviorModel& m,
                        const nlohmann::json& provenance = nlohmann::json::object()) {
  detail::write_file(path, model_to_string(m, provenance));
}

inline LoadedModel read_model(const std::filesystem::path& path) {
  return model_from_lines(detail::read_lines(path), path.string());
}

inline void write_model_set(const std::filesystem::path& dir, const ModelSet& set,
                            const nlohmann::json& provenance = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  for (const auto& [s, m] : set.models) write_model(dir / model_file_name(s), m, provenance);
}

inline ModelSet read_model_set(const std::filesystem::path& dir) {
  ModelSet set;
  for (auto s : kAllSituations) {
    auto loaded = read_model(dir / model_file_name(s));
    if (loaded.model.situation() != s) {
      throw FormatError((dir / model_file_name(s)).string() + ": situation mismatch");
    }
    set.models.emplace(s, std::move(loaded.model));
  }
  return set;
}

// Targets: one CSV with sparse (histogram, bin, count) rows and the grid in
// the metadata block.
inline std::string targets_to_string(const Targets& t, const nlohmann::json& provenance) {
  std::string out;
  auto it = std::back_inserter(out);
  fmt::format_to(it, "# nde-targets: {}\n", kModelFormatVersion);
  fmt::format_to(it, "# grid: {}\n", grid_config_json(t.grid).dump());
  fmt::format_to(it, "# provenance: {}\n", provenance.dump());
  out += "histogram,bin,count\n";
  auto emit = [&](const char* name, const std::vector<std::uint64_t>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] != 0) fmt::format_to(it, "{},{},{}\n", name, i, c[i]);
    }
  };
  emit("free_speed", t.free_speed);
  emit("cf_joint", t.cf_joint);
  emit("speed_all", t.speed_all);
  return out;
}

inline void write_targets(const std::filesystem::path& path, const Targets& t,
                          const nlohmann::json& provenance = nlohmann::json::object()) {
  detail::write_file(path, targets_to_string(t, provenance));
}

inline Targets read_targets(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  const std::string where = path.string();
  std::size_t i = 0;
  std::string key, value;
  GridConfig g;
  int version = -1;
  for (; i < lines.size() && detail::meta(lines[i], key, value); ++i) {
    if (key == "nde-targets") version = detail::parse<int>(value, where);
    if (key == "grid") g = grid_config_from_json(nlohmann::json::parse(value));
  }
  if (version != kModelFormatVersion) throw FormatError(where + ": unsupported targets version");
  if (i >= lines.size() || lines[i] != "histogram,bin,count") {
    throw FormatError(where + ": missing column header");
  }
  Targets t(g);
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 3) throw FormatError(where + ":" + std::to_string(i + 1) + ": wrong column count");
    std::vector<std::uint64_t>* h = nullptr;
    if (f[0] == "free_speed") h = &t.free_speed;
    else if (f[0] == "cf_joint") h = &t.cf_joint;
    else if (f[0] == "speed_all") h = &t.speed_all;
    else throw FormatError(where + ": unknown histogram '" + std::string(f[0]) + "'");
    const auto bin = detail::parse<std::size_t>(f[1], where);
    if (bin >= h->size()) throw FormatError(where + ": bin out of range");
    (*h)[bin] = detail::parse<std::uint64_t>(f[2], where);
  }
  return t;
}

}  // namespace nde::empirical
