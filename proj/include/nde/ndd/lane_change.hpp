#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "nde/core/action_space.hpp"
#include "nde/ndd/trajectory.hpp"

namespace nde::ndd {

struct LaneChangeDetectorConfig {
  double lane_width = 3.5;       // m
  double slope_threshold = 0.2;  // m of marking-distance decrease per sample
  int min_run = 3;               // consecutive decreasing samples before the crossing
  double jump_fraction = 0.5;    // crossing jump must exceed this share of the lane width
};

struct LaneChangeEvent {
  std::int64_t vehicle_id = 0;
  Direction direction = Direction::Left;
  double start_time = 0.0;
  double cross_time = 0.0;
  double end_time = 0.0;
  std::size_t start_index = 0;  // indices into the track's records
  std::size_t end_index = 0;
};

namespace detail {

// Distance toward the marking being approached, positive inside the lane.
inline double approach_distance(const TrajectoryRecord& r, Direction d) {
  return d == Direction::Left ? r.dist_left_marking : -r.dist_right_marking;
}

inline void detect_direction(const TrajectorySegment& track, Direction dir,
                             const LaneChangeDetectorConfig& cfg,
                             std::vector<LaneChangeEvent>& out) {
  const auto& rs = track.records;
  const std::size_t n = rs.size();
  if (n < 2) return;
  const double half = 0.5 * cfg.lane_width;
  constexpr double kTol = 1e-6;
  auto d = [&](std::size_t i) { return approach_distance(rs[i], dir); };

  for (std::size_t i = 1; i < n; ++i) {
    if (!(d(i) - d(i - 1) > cfg.jump_fraction * cfg.lane_width)) continue;

    // Walk back over the approach; stop at the lane centre so that a
    // manoeuvre immediately following another one is not merged into it.
    std::size_t k = i - 1;
    int run = 0;
    while (k >= 1 && d(k) < half - kTol && d(k - 1) - d(k) > cfg.slope_threshold) {
      --k;
      ++run;
    }
    if (run < cfg.min_run) continue;

    // Walk forward until the vehicle settles at the new lane centre.
    std::size_t m = i;
    while (m + 1 < n && d(m) > half + kTol && d(m) - d(m + 1) > cfg.slope_threshold) ++m;

    const double dt = rs[i - 1].time - rs[i - 2].time;
    const double slope = (d(i - 2) - d(i - 1)) / dt;
    LaneChangeEvent ev;
    ev.vehicle_id = track.vehicle_id;
    ev.direction = dir;
    ev.start_index = k;
    ev.end_index = m;
    ev.start_time = rs[k].time;
    ev.cross_time = rs[i - 1].time + std::max(0.0, d(i - 1)) / slope;
    ev.end_time = rs[m].time;
    out.push_back(ev);
  }
}

}  // namespace detail

/// Finds lane changes in one continuous track from the lane-marking
/// distances: the distance to the approached marking falls steadily to zero
/// and then jumps by about a lane width when the marking is crossed.
inline std::vector<LaneChangeEvent> detect_lane_changes(const TrajectorySegment& track,
                                                        const LaneChangeDetectorConfig& cfg = {}) {
  std::vector<LaneChangeEvent> out;
  detail::detect_direction(track, Direction::Left, cfg, out);
  detail::detect_direction(track, Direction::Right, cfg, out);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.start_time < b.start_time;
  });
  return out;
}

}  // namespace nde::ndd
