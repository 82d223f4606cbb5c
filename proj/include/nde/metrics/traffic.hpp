#pragma once

#include <limits>
#include <span>
#include <stdexcept>

#include "nde/core/histogram.hpp"
#include "nde/sim/episode.hpp"

namespace nde::metrics {

struct TrafficHistograms {
  Histogram velocity;
  Histogram range;
};

/// Velocity and car-following range histograms pooled over the collection
/// windows of several runs.
inline TrafficHistograms collect_histograms(std::span<const sim::TrafficStats> runs) {
  if (runs.empty()) throw std::invalid_argument("collect_histograms: no runs");
  TrafficHistograms h{runs.front().velocity, runs.front().range};
  for (std::size_t i = 1; i < runs.size(); ++i) {
    h.velocity.merge(runs[i].velocity);
    h.range.merge(runs[i].range);
  }
  return h;
}

struct LaneChangeRate {
  double km_per_lane_change = std::numeric_limits<double>::infinity();
  bool no_lane_changes = true;
  double vehicle_km = 0.0;
  std::uint64_t lane_changes = 0;
};

inline LaneChangeRate lane_change_rate(double vehicle_km, std::uint64_t lane_changes) {
  if (vehicle_km < 0.0) throw std::invalid_argument("lane_change_rate: negative distance");
  LaneChangeRate r;
  r.vehicle_km = vehicle_km;
  r.lane_changes = lane_changes;
  if (lane_changes > 0) {
    r.no_lane_changes = false;
    r.km_per_lane_change = vehicle_km / static_cast<double>(lane_changes);
  }
  return r;
}

inline LaneChangeRate lane_change_rate(std::span<const sim::TrafficStats> runs) {
  if (runs.empty()) throw std::invalid_argument("lane_change_rate: no runs");
  double km = 0.0;
  std::uint64_t n = 0;
  for (const auto& r : runs) {
    km += r.vehicle_km;
    n += r.lane_changes;
  }
  return lane_change_rate(km, n);
}

}  // namespace nde::metrics
