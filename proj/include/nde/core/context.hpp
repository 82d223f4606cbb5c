#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "nde/core/action_space.hpp"
#include "nde/core/situation.hpp"
#include "nde/core/state_grid.hpp"

namespace nde {

struct Neighbor {
  bool present = false;
  double gap = 0.0;    // bumper-to-bumper, m; negative means longitudinal overlap
  double speed = 0.0;  // m/s
  std::int64_t id = -1;
};

struct LaneSide {
  bool lane_exists = false;
  Neighbor lead;
  Neighbor rear;
};

/// Continuous surroundings of one vehicle at one decision moment. Built from
/// recorded trajectories (ndd) or from the simulated world (sim); both sides
/// classify through the same ContextEncoder.
struct DrivingContext {
  double v = 0.0;
  Neighbor lead;
  Neighbor rear;
  LaneSide left;
  LaneSide right;

  const LaneSide& side(Direction d) const { return d == Direction::Left ? left : right; }
  LaneSide& side(Direction d) { return d == Direction::Left ? left : right; }
};

struct LaneChangeContext {
  Situation situation = Situation::FreeLaneChange;
  std::uint64_t state = 0;
};

class ContextEncoder {
 public:
  ContextEncoder() : ContextEncoder(GridConfig{}) {}
  explicit ContextEncoder(const GridConfig& g) : config_(g) {
    for (auto s : kAllSituations) grids_[static_cast<std::size_t>(s)] = make_grid(s, g);
  }

  const GridConfig& config() const { return config_; }
  double d_obs() const { return config_.range_max; }
  const StateGrid& grid(Situation s) const { return grids_[static_cast<std::size_t>(s)]; }

  bool visible(const Neighbor& n) const { return n.present && n.gap < d_obs(); }

  Situation longitudinal_situation(const DrivingContext& c) const {
    return visible(c.lead) ? Situation::CarFollowing : Situation::FreeDriving;
  }

  std::uint64_t longitudinal_state(const DrivingContext& c) const {
    if (!visible(c.lead)) {
      const std::array<double, 1> vals{c.v};
      return grid(Situation::FreeDriving).encode_clamped(vals);
    }
    const std::array<double, 3> vals{c.v, c.lead.gap, c.lead.speed - c.v};
    return grid(Situation::CarFollowing).encode_clamped(vals);
  }

  // A lane change toward `d` needs a visible lead in the current lane, an
  // existing target lane and no target-lane vehicle overlapping the ego.
  bool lane_change_available(const DrivingContext& c, Direction d) const {
    if (!visible(c.lead)) return false;
    const auto& s = c.side(d);
    if (!s.lane_exists) return false;
    if (visible(s.lead) && s.lead.gap < 0.0) return false;
    if (visible(s.rear) && s.rear.gap < 0.0) return false;
    return true;
  }

  std::optional<LaneChangeContext> lane_change_context(const DrivingContext& c,
                                                       Direction d) const {
    if (!lane_change_available(c, d)) return std::nullopt;
    const auto& s = c.side(d);
    const bool tlead = visible(s.lead);
    const bool trear = visible(s.rear);
    const double dir = d == Direction::Left ? 0.0 : 1.0;
    if (tlead && trear) {
      const std::array<double, 8> vals{dir,          c.v,        c.lead.speed, c.lead.gap,
                                       s.lead.speed, s.lead.gap, s.rear.speed, s.rear.gap};
      return LaneChangeContext{Situation::LcTwoAdjacent,
                               grid(Situation::LcTwoAdjacent).encode_clamped(vals)};
    }
    if (trear) {
      const std::array<double, 6> vals{dir, c.v, c.lead.speed, c.lead.gap, s.rear.speed, s.rear.gap};
      return LaneChangeContext{Situation::CutIn, grid(Situation::CutIn).encode_clamped(vals)};
    }
    if (tlead) {
      const std::array<double, 6> vals{dir, c.v, c.lead.speed, c.lead.gap, s.lead.speed, s.lead.gap};
      return LaneChangeContext{Situation::LcOneAdjacent,
                               grid(Situation::LcOneAdjacent).encode_clamped(vals)};
    }
    const std::array<double, 4> vals{dir, c.v, c.lead.speed, c.lead.gap};
    return LaneChangeContext{Situation::FreeLaneChange,
                             grid(Situation::FreeLaneChange).encode_clamped(vals)};
  }

 private:
  GridConfig config_;
  std::array<StateGrid, 6> grids_;
};

}  // namespace nde
