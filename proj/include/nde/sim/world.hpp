#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nde/core/context.hpp"
#include "nde/ndd/trajectory.hpp"
#include "nde/sim/config.hpp"

namespace nde::sim {

enum class VehicleKind : std::uint8_t { Background, Av };

enum class AccidentType : std::uint8_t { RearEnd, Sideswipe, Angle, Other };

inline const char* to_string(AccidentType t) {
  switch (t) {
    case AccidentType::RearEnd: return "rear_end";
    case AccidentType::Sideswipe: return "sideswipe";
    case AccidentType::Angle: return "angle";
    case AccidentType::Other: return "other";
  }
  return "?";
}

struct Maneuver {
  bool active = false;
  Direction dir = Direction::Left;
  int from = 0;
  int to = 0;
  int ticks = 0;  // steps completed
};

struct Vehicle {
  std::int64_t id = 0;
  VehicleKind kind = VehicleKind::Background;
  int lane = 0;           // 0 is the rightmost lane; switches halfway through a lane change
  double x = 0.0;         // front bumper, wrapped to [0, length)
  double odometer = 0.0;  // unwrapped distance travelled
  double v = 0.0;
  double accel = 0.0;     // last applied acceleration
  Maneuver lc;
  bool active = true;

  bool occupies(int l) const {
    if (lc.active) return l == lc.from || l == lc.to;
    return l == lane;
  }
};

struct Observation {
  DrivingContext ctx;
  Neighbor maneuver_lead;  // nearest lead over every lane the vehicle occupies
  // Neighbours two lanes over, indexed by Direction. Empty when that lane is missing.
  std::array<LaneSide, 2> beyond{};
};

struct Collision {
  std::size_t a = 0;
  std::size_t b = 0;
  AccidentType type = AccidentType::RearEnd;
};

inline int target_lane(int lane, Direction d) { return d == Direction::Left ? lane + 1 : lane - 1; }

inline Direction opposite(Direction d) {
  return d == Direction::Left ? Direction::Right : Direction::Left;
}

/// Multi-lane periodic road.
class World {
 public:
  explicit World(SimConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const SimConfig& config() const { return cfg_; }
  std::vector<Vehicle>& vehicles() { return vehicles_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  double time() const { return time_; }
  void set_time(double t) {
    origin_ = t - static_cast<double>(ticks_) * cfg_.dt;
    time_ = t;
  }
  std::uint64_t ticks() const { return ticks_; }

  std::size_t add(Vehicle v) {
    if (v.lane < 0 || v.lane >= cfg_.road.lanes) throw std::out_of_range("vehicle lane outside road");
    v.x = wrap(v.x);
    vehicles_.push_back(v);
    return vehicles_.size() - 1;
  }

  std::size_t active_count() const {
    return static_cast<std::size_t>(
        std::count_if(vehicles_.begin(), vehicles_.end(), [](const Vehicle& v) { return v.active; }));
  }

  double wrap(double x) const {
    const double c = cfg_.road.length;
    double r = std::fmod(x, c);
    if (r < 0.0) r += c;
    if (r >= c) r -= c;
    return r;
  }

  // Distance from a forward to b along the ring, in [0, length).
  double ahead(const Vehicle& a, const Vehicle& b) const { return wrap(b.x - a.x); }

  // Signed offset of b relative to a, in (-length/2, length/2].
  double signed_offset(const Vehicle& a, const Vehicle& b) const {
    double d = ahead(a, b);
    if (d > 0.5 * cfg_.road.length) d -= cfg_.road.length;
    return d;
  }

  bool lane_exists(int l) const { return l >= 0 && l < cfg_.road.lanes; }

  double progress(const Vehicle& v) const {
    if (!v.lc.active) return 0.0;
    return static_cast<double>(v.lc.ticks) / static_cast<double>(cfg_.lc_ticks());
  }

  // Lateral position relative to the centre of `lane`, positive to the left.
  double lateral_offset(const Vehicle& v) const {
    if (!v.lc.active) return 0.0;
    const double w = cfg_.road.lane_width;
    const double sgn = v.lc.dir == Direction::Left ? 1.0 : -1.0;
    const double p = progress(v);
    return v.lane == v.lc.from ? sgn * p * w : sgn * (p - 1.0) * w;
  }

  Observation observe(std::size_t i) const {
    const Vehicle& ego = vehicles_[i];
    const double len = cfg_.road.vehicle_length;
    const double c = cfg_.road.length;
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Index 0: two lanes right, 1: right, 2: own lane, 3: left, 4: two lanes left.
    std::array<double, 5> best_ahead{inf, inf, inf, inf, inf};
    std::array<double, 5> best_behind{inf, inf, inf, inf, inf};
    std::array<std::size_t, 5> ahead_idx{};
    std::array<std::size_t, 5> behind_idx{};
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      if (j == i || !vehicles_[j].active) continue;
      const Vehicle& o = vehicles_[j];
      const double dx = ahead(ego, o);
      const double back = dx > 0.0 ? c - dx : c;
      for (int k = 0; k < 5; ++k) {
        const int l = ego.lane + k - 2;
        if (!o.occupies(l)) continue;
        if (dx < best_ahead[static_cast<std::size_t>(k)]) {
          best_ahead[static_cast<std::size_t>(k)] = dx;
          ahead_idx[static_cast<std::size_t>(k)] = j;
        }
        if (back < best_behind[static_cast<std::size_t>(k)]) {
          best_behind[static_cast<std::size_t>(k)] = back;
          behind_idx[static_cast<std::size_t>(k)] = j;
        }
      }
    }
    auto make = [&](std::size_t k, bool forward) {
      Neighbor n;
      const double d = forward ? best_ahead[k] : best_behind[k];
      if (!std::isfinite(d)) return n;
      const Vehicle& o = vehicles_[forward ? ahead_idx[k] : behind_idx[k]];
      n.present = true;
      n.gap = d - len;
      n.speed = o.v;
      n.id = o.id;
      return n;
    };
    Observation out;
    DrivingContext& ctx = out.ctx;
    ctx.v = ego.v;
    ctx.lead = make(2, true);
    ctx.rear = make(2, false);
    if (!ctx.lead.present) {
      // Alone in the lane: on a ring the vehicle follows itself.
      ctx.lead = Neighbor{true, c - len, ego.v, ego.id};
      ctx.rear = ctx.lead;
    }
    ctx.left.lane_exists = lane_exists(ego.lane + 1);
    ctx.right.lane_exists = lane_exists(ego.lane - 1);
    if (ctx.left.lane_exists) {
      ctx.left.lead = make(3, true);
      ctx.left.rear = make(3, false);
    }
    if (ctx.right.lane_exists) {
      ctx.right.lead = make(1, true);
      ctx.right.rear = make(1, false);
    }
    for (auto [d, k] : {std::pair{Direction::Left, std::size_t{4}}, std::pair{Direction::Right, std::size_t{0}}}) {
      LaneSide& b = out.beyond[static_cast<std::size_t>(d)];
      b.lane_exists = lane_exists(target_lane(target_lane(ego.lane, d), d));
      if (!b.lane_exists) continue;
      b.lead = make(k, true);
      b.rear = make(k, false);
    }
    out.maneuver_lead = ctx.lead;
    if (ego.lc.active) {
      const Direction other = ego.lane == ego.lc.from ? ego.lc.dir : opposite(ego.lc.dir);
      const Neighbor& n = ctx.side(other).lead;
      if (n.present && n.gap < out.maneuver_lead.gap) out.maneuver_lead = n;
    }
    return out;
  }

  void start_lane_change(std::size_t i, Direction d) {
    Vehicle& v = vehicles_[i];
    if (v.lc.active) throw std::logic_error("vehicle is already changing lanes");
    const int to = target_lane(v.lane, d);
    if (!lane_exists(to)) throw std::logic_error("lane change toward a missing lane");
    v.lc = Maneuver{true, d, v.lane, to, 0};
  }

  // Moves every active vehicle one step with the given accelerations and
  // advances lane-change maneuvers.
  void integrate(const std::vector<double>& accel) {
    const double dt = cfg_.dt;
    const int total = cfg_.lc_ticks();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      Vehicle& v = vehicles_[i];
      if (!v.active) continue;
      const double a = accel[i];
      double nv = v.v + a * dt;
      if (v.kind == VehicleKind::Background) {
        nv = std::clamp(nv, cfg_.speed_min, std::nextafter(cfg_.speed_max, cfg_.speed_min));
      } else {
        nv = std::max(0.0, nv);
      }
      const double dx = 0.5 * (v.v + nv) * dt;
      v.x = wrap(v.x + dx);
      v.odometer += dx;
      v.v = nv;
      v.accel = a;
      if (v.lc.active) {
        ++v.lc.ticks;
        if (2 * v.lc.ticks >= total) v.lane = v.lc.to;
        if (v.lc.ticks >= total) v.lc = Maneuver{};
      }
    }
    ++ticks_;
    time_ = origin_ + static_cast<double>(ticks_) * dt;
  }

  // Pairs sharing a lane with longitudinal overlap.
  std::vector<Collision> collisions() const {
    std::vector<Collision> out;
    const double len = cfg_.road.vehicle_length;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      const Vehicle& a = vehicles_[i];
      if (!a.active) continue;
      for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
        const Vehicle& b = vehicles_[j];
        if (!b.active) continue;
        if (std::abs(signed_offset(a, b)) >= len) continue;
        bool share = false;
        for (int l = 0; l < cfg_.road.lanes && !share; ++l) share = a.occupies(l) && b.occupies(l);
        if (!share) continue;
        out.push_back(Collision{i, j, classify(a, b)});
      }
    }
    return out;
  }

  static AccidentType classify(const Vehicle& a, const Vehicle& b) {
    if (a.lc.active && b.lc.active) {
      if (a.lc.dir != b.lc.dir && a.lc.to == b.lc.to) return AccidentType::Angle;
      return AccidentType::Sideswipe;
    }
    if (a.lc.active || b.lc.active) return AccidentType::Sideswipe;
    return AccidentType::RearEnd;
  }

  /// Trajectory record of vehicle i as an observer inside the traffic would
  /// log it: neighbours beyond the observation range are omitted.
  ndd::TrajectoryRecord record(std::size_t i, const Observation& obs, double accel) const {
    const Vehicle& v = vehicles_[i];
    const double d_obs = cfg_.grid.range_max;
    const double w = cfg_.road.lane_width;
    ndd::TrajectoryRecord r;
    r.time = time_;
    r.vehicle_id = v.id;
    r.lane_id = v.lane;
    r.x = v.odometer;
    r.v = v.v;
    r.accel = accel;
    const auto& c = obs.ctx;
    auto visible = [&](const Neighbor& n) { return n.present && n.gap < d_obs && n.id != v.id; };
    if (visible(c.lead)) {
      r.lead_id = c.lead.id;
      r.range = c.lead.gap;
      r.range_rate = c.lead.speed - v.v;
    }
    const double y = lateral_offset(v);
    r.dist_left_marking = 0.5 * w - y;
    r.dist_right_marking = -0.5 * w - y;
    r.has_left_lane = c.left.lane_exists;
    r.has_right_lane = c.right.lane_exists;
    auto slot = [&](const Neighbor& n) {
      ndd::NeighborSlot s;
      if (!visible(n)) return s;
      s.id = n.id;
      s.range = n.gap;
      s.range_rate = n.speed - v.v;
      return s;
    };
    r.left_lead = slot(c.left.lead);
    r.left_rear = slot(c.left.rear);
    r.right_lead = slot(c.right.lead);
    r.right_rear = slot(c.right.rear);
    return r;
  }

 private:
  SimConfig cfg_;
  std::vector<Vehicle> vehicles_;
  double time_ = 0.0;
  double origin_ = 0.0;
  std::uint64_t ticks_ = 0;
};

}  // namespace nde::sim
