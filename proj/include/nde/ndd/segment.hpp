#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nde/ndd/trajectory.hpp"

namespace nde::ndd {

struct SegmentConfig {
  double max_gap = 2.0;         // s; a larger time gap breaks a trajectory
  double min_duration = 3.0;    // s; shorter pieces are dropped (strict >)
  double sample_period = 0.1;   // s
  double max_speed_jump = 4.0;  // m/s between consecutive samples
};

/// Throws unless records are sorted by vehicle id and strictly increasing
/// time within each vehicle.
inline void check_sorted(std::span<const TrajectoryRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (b.vehicle_id < a.vehicle_id || (b.vehicle_id == a.vehicle_id && !(b.time > a.time))) {
      throw std::invalid_argument("records not sorted by (vehicle_id, time) at index " +
                                  std::to_string(i));
    }
  }
}

inline double span_duration(const TrajectoryRecord& first, const TrajectoryRecord& last,
                            double sample_period) {
  return last.time - first.time + sample_period;
}

inline bool is_noisy_step(const TrajectoryRecord& a, const TrajectoryRecord& b,
                          const SegmentConfig& cfg) {
  return std::abs(b.v - a.v) > cfg.max_speed_jump || b.x < a.x;
}

/// Continuous per-vehicle tracks: split only where the vehicle changes or
/// the time gap exceeds max_gap. Lane-change detection runs on tracks since
/// a lead change at the lane crossing would otherwise cut the event apart.
inline std::vector<TrajectorySegment> split_tracks(std::span<const TrajectoryRecord> records,
                                                   const SegmentConfig& cfg = {}) {
  check_sorted(records);
  std::vector<TrajectorySegment> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (out.empty() || out.back().vehicle_id != r.vehicle_id ||
        r.time - out.back().records.back().time > cfg.max_gap + 1e-9) {
      out.push_back({r.vehicle_id, {}, 0.0});
    }
    out.back().records.push_back(r);
  }
  for (auto& s : out) {
    s.duration = span_duration(s.records.front(), s.records.back(), cfg.sample_period);
  }
  return out;
}

/// Breaks a sorted record stream into trajectory segments. Boundaries fall at
/// a vehicle change, a gap longer than max_gap, a lead change, or a noisy
/// step (speed jump or backwards position). Records that claim a lead at a
/// non-positive range are dropped. Pieces lasting min_duration or less are
/// discarded, and surviving neighbours that could have been one segment
/// (same vehicle and lead, small gap, clean junction) are joined again, so
/// that segmenting the flattened output reproduces it.
inline std::vector<TrajectorySegment> segment(std::span<const TrajectoryRecord> records,
                                              const SegmentConfig& cfg = {}) {
  check_sorted(records);
  auto joinable = [&](const TrajectoryRecord& a, const TrajectoryRecord& b) {
    return a.vehicle_id == b.vehicle_id && a.lead_id == b.lead_id &&
           b.time - a.time <= cfg.max_gap + 1e-9 && !is_noisy_step(a, b, cfg);
  };

  std::vector<TrajectorySegment> pieces;
  const TrajectoryRecord* prev = nullptr;
  for (const auto& r : records) {
    if (r.has_lead() && !(r.range > 0.0)) continue;
    if (prev == nullptr || !joinable(*prev, r)) pieces.push_back({r.vehicle_id, {}, 0.0});
    pieces.back().records.push_back(r);
    prev = &r;
  }

  std::vector<TrajectorySegment> out;
  for (auto& p : pieces) {
    p.duration = span_duration(p.records.front(), p.records.back(), cfg.sample_period);
    if (!(p.duration > cfg.min_duration + 1e-9)) continue;
    if (!out.empty() && joinable(out.back().records.back(), p.records.front())) {
      auto& o = out.back();
      o.records.insert(o.records.end(), p.records.begin(), p.records.end());
      o.duration = span_duration(o.records.front(), o.records.back(), cfg.sample_period);
      continue;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<TrajectoryRecord> flatten(const std::vector<TrajectorySegment>& segments) {
  std::vector<TrajectoryRecord> out;
  std::size_t n = 0;
  for (const auto& s : segments) n += s.records.size();
  out.reserve(n);
  for (const auto& s : segments) out.insert(out.end(), s.records.begin(), s.records.end());
  return out;
}

}  // namespace nde::ndd
