#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nde/core/state_grid.hpp"

namespace nde {

enum class Situation {
  FreeDriving = 0,
  CarFollowing = 1,
  CutIn = 2,
  LcOneAdjacent = 3,
  LcTwoAdjacent = 4,
  FreeLaneChange = 5,
};

inline constexpr std::array<Situation, 6> kAllSituations = {
    Situation::FreeDriving,   Situation::CarFollowing,  Situation::CutIn,
    Situation::LcOneAdjacent, Situation::LcTwoAdjacent, Situation::FreeLaneChange};

inline constexpr bool is_longitudinal(Situation s) {
  return s == Situation::FreeDriving || s == Situation::CarFollowing;
}

inline const char* to_string(Situation s) {
  switch (s) {
    case Situation::FreeDriving: return "FreeDriving";
    case Situation::CarFollowing: return "CarFollowing";
    case Situation::CutIn: return "CutIn";
    case Situation::LcOneAdjacent: return "LcOneAdjacent";
    case Situation::LcTwoAdjacent: return "LcTwoAdjacent";
    case Situation::FreeLaneChange: return "FreeLaneChange";
  }
  return "?";
}

inline Situation situation_from_string(std::string_view name) {
  for (auto s : kAllSituations) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown situation '" + std::string(name) + "'");
}

/// Binning parameters shared by all six situation grids.
struct GridConfig {
  double speed_min = 20.0;
  double speed_max = 40.0;
  double free_speed_resolution = 0.2;
  double speed_resolution = 1.0;
  double range_max = 115.0;  // observation cap d_obs
  double range_resolution = 1.0;
  double range_rate_min = -10.0;
  double range_rate_max = 10.0;
  double range_rate_resolution = 1.0;
};

inline Axis speed_axis(const GridConfig& g, const char* name, double res) {
  return Axis(name, g.speed_min, g.speed_max, res);
}

/// State tuples per situation. Lane-change contexts carry a leading
/// direction axis (0 = left, 1 = right) followed by the ego speed, the
/// current-lane lead (speed, gap) and the target-lane vehicles that define
/// the context (speed, gap each).
inline StateGrid make_grid(Situation s, const GridConfig& g) {
  const Axis range("r", 0.0, g.range_max, g.range_resolution);
  const Axis dir("dir", 0.0, 2.0, 1.0);
  auto v = [&](const char* n) { return speed_axis(g, n, g.speed_resolution); };
  auto r = [&](const char* n) { return Axis(n, 0.0, g.range_max, g.range_resolution); };
  switch (s) {
    case Situation::FreeDriving:
      return StateGrid(GridKind::FreeDriving, {speed_axis(g, "v", g.free_speed_resolution)});
    case Situation::CarFollowing:
      return StateGrid(GridKind::CarFollowing,
                       {v("v"), range,
                        Axis("rr", g.range_rate_min, g.range_rate_max, g.range_rate_resolution)});
    case Situation::FreeLaneChange:
      return StateGrid(GridKind::LaneChangeContext, {dir, v("v"), v("v_lead"), r("r_lead")});
    case Situation::CutIn:
      return StateGrid(GridKind::LaneChangeContext,
                       {dir, v("v"), v("v_lead"), r("r_lead"), v("v_rear"), r("r_rear")});
    case Situation::LcOneAdjacent:
      return StateGrid(GridKind::LaneChangeContext,
                       {dir, v("v"), v("v_lead"), r("r_lead"), v("v_tlead"), r("r_tlead")});
    case Situation::LcTwoAdjacent:
      return StateGrid(GridKind::LaneChangeContext,
                       {dir, v("v"), v("v_lead"), r("r_lead"), v("v_tlead"), r("r_tlead"),
                        v("v_trear"), r("r_trear")});
  }
  throw std::invalid_argument("bad situation");
}

}  // namespace nde
