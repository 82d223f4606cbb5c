#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nde/core/histogram.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/world.hpp"

namespace nde::sim {

/// One simulation tick: every active vehicle observes the frozen world and
/// decides, `on_decision(i, obs, decision)` sees each choice, then lane
/// changes start, everything integrates and collisions are reported.
class Stepper {
 public:
  template <class Decide, class OnDecision>
  const std::vector<Collision>& step(World& w, Rng& rng, Decide&& decide, OnDecision&& on_decision) {
    auto& vs = w.vehicles();
    const std::size_t n = vs.size();
    obs_.resize(n);
    decisions_.resize(n);
    accel_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!vs[i].active) continue;
      obs_[i] = w.observe(i);
      decisions_[i] = decide(i, vs[i], obs_[i], rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!vs[i].active) continue;
      on_decision(i, obs_[i], decisions_[i]);
      if (decisions_[i].lane_change && !vs[i].lc.active) {
        w.start_lane_change(i, *decisions_[i].lane_change);
      }
      accel_[i] = decisions_[i].accel;
    }
    w.integrate(accel_);
    collisions_ = w.collisions();
    return collisions_;
  }

  template <class Decide>
  const std::vector<Collision>& step(World& w, Rng& rng, Decide&& decide) {
    return step(w, rng, std::forward<Decide>(decide),
                [](std::size_t, const Observation&, const Decision&) {});
  }

 private:
  std::vector<Observation> obs_;
  std::vector<Decision> decisions_;
  std::vector<double> accel_;
  std::vector<Collision> collisions_;
};

/// Traffic statistics gathered over the collection window of an NDE run.
struct TrafficStats {
  Histogram velocity = Histogram::uniform(20.0, 40.0, 0.2);
  Histogram range = Histogram::uniform(0.0, 115.0, 1.0);
  std::uint64_t lane_changes = 0;
  double vehicle_km = 0.0;
  double vehicle_hours = 0.0;
  std::uint64_t vehicle_steps = 0;
  std::uint64_t collisions = 0;

  void merge(const TrafficStats& o) {
    velocity.merge(o.velocity);
    range.merge(o.range);
    lane_changes += o.lane_changes;
    vehicle_km += o.vehicle_km;
    vehicle_hours += o.vehicle_hours;
    vehicle_steps += o.vehicle_steps;
    collisions += o.collisions;
  }
};

inline TrafficStats make_traffic_stats(const SimConfig& cfg) {
  TrafficStats s;
  s.velocity = Histogram::uniform(cfg.speed_min, cfg.speed_max, cfg.grid.free_speed_resolution);
  s.range = Histogram::uniform(0.0, cfg.grid.range_max, cfg.grid.range_resolution);
  return s;
}

namespace detail {

template <class Policy>
auto as_decider(const Policy& p) {
  return [&p](std::size_t, const Vehicle& v, const Observation& o, Rng& rng) {
    return p.decide(v, o, rng);
  };
}

inline void remove_colliders(World& w, const std::vector<Collision>& cs) {
  for (const auto& c : cs) {
    w.vehicles()[c.a].active = false;
    w.vehicles()[c.b].active = false;
  }
}

}  // namespace detail

/// Statistics mode: warm up, then record speed, car-following gap, lane
/// changes and distance travelled for every background vehicle. Colliding
/// vehicles are taken off the road.
template <class Policy>
TrafficStats run_traffic(World& w, const Policy& policy, Rng& rng) {
  const SimConfig& cfg = w.config();
  Stepper stepper;
  auto decide = detail::as_decider(policy);
  const auto warm = static_cast<std::uint64_t>(cfg.warmup / cfg.dt + 0.5);
  const auto collect = static_cast<std::uint64_t>(cfg.collection / cfg.dt + 0.5);
  TrafficStats stats = make_traffic_stats(cfg);
  for (std::uint64_t t = 0; t < warm; ++t) {
    const auto& cs = stepper.step(w, rng, decide);
    stats.collisions += cs.size();
    detail::remove_colliders(w, cs);
  }
  const double d_obs = cfg.grid.range_max;
  std::vector<double> odo0;
  odo0.reserve(w.vehicles().size());
  for (const Vehicle& v : w.vehicles()) odo0.push_back(v.odometer);
  for (std::uint64_t t = 0; t < collect; ++t) {
    const auto& cs = stepper.step(w, rng, decide,
                                  [&](std::size_t i, const Observation& o, const Decision& d) {
      const Vehicle& v = w.vehicles()[i];
      if (v.kind != VehicleKind::Background) return;
      stats.velocity.add(v.v);
      const Neighbor& lead = o.ctx.lead;
      if (lead.present && lead.id != v.id && lead.gap < d_obs) stats.range.add(lead.gap);
      if (d.lane_change && !v.lc.active) ++stats.lane_changes;
      ++stats.vehicle_steps;
    });
    for (const Vehicle& v : w.vehicles()) {
      if (!v.active || v.kind != VehicleKind::Background) continue;
      stats.vehicle_hours += cfg.dt / 3600.0;
    }
    stats.collisions += cs.size();
    detail::remove_colliders(w, cs);
  }
  double km = 0.0;
  for (std::size_t i = 0; i < w.vehicles().size(); ++i) {
    const Vehicle& v = w.vehicles()[i];
    if (v.kind == VehicleKind::Background) km += v.odometer - odo0[i];
  }
  stats.vehicle_km = km / 1000.0;
  return stats;
}

struct AvOutcome {
  bool accident = false;
  std::optional<AccidentType> type;
  double distance = 0.0;  // m travelled by the AV
  double time = 0.0;      // s simulated
  std::uint64_t background_collisions = 0;
};

/// Testing mode: the vehicle at `av` is driven by `av_policy`, the rest by
/// `background`. Ends when the AV has covered the configured distance or is
/// involved in a collision; collisions among background vehicles only remove
/// those vehicles.
template <class AvPolicy, class Background>
AvOutcome run_av(World& w, std::size_t av, const AvPolicy& av_policy, const Background& background,
                 Rng& rng) {
  const SimConfig& cfg = w.config();
  w.vehicles()[av].kind = VehicleKind::Av;
  const double start = w.vehicles()[av].odometer;
  Stepper stepper;
  auto decide = [&](std::size_t i, const Vehicle& v, const Observation& o, Rng& r) {
    return i == av ? av_policy.decide(v, o, r) : background.decide(v, o, r);
  };
  AvOutcome out;
  const auto max_ticks = static_cast<std::uint64_t>(cfg.av_max_time / cfg.dt + 0.5);
  for (std::uint64_t t = 0; t < max_ticks; ++t) {
    const auto& cs = stepper.step(w, rng, decide);
    out.time = static_cast<double>(t + 1) * cfg.dt;
    out.distance = w.vehicles()[av].odometer - start;
    for (const auto& c : cs) {
      if (c.a == av || c.b == av) {
        out.accident = true;
        out.type = c.type;
        return out;
      }
    }
    out.background_collisions += cs.size();
    detail::remove_colliders(w, cs);
    if (out.distance >= cfg.av_distance) {
      out.distance = cfg.av_distance;
      return out;
    }
  }
  return out;
}

}  // namespace nde::sim
