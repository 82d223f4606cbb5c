#pragma once

#include <cstdint>
#include <vector>

#include "nde/core/context.hpp"
#include "nde/core/situation.hpp"

namespace nde::ndd {

struct NeighborSlot {
  std::int64_t id = -1;  // -1: no vehicle observed
  double range = 0.0;    // bumper-to-bumper gap, m (negative when overlapping)
  double range_rate = 0.0;

  bool present() const { return id >= 0; }
  bool operator==(const NeighborSlot&) const = default;
};

/// One 10 Hz observation of a vehicle and its surroundings. Column order in
/// the CSV ingestion format follows the field order here.
struct TrajectoryRecord {
  double time = 0.0;
  std::int64_t vehicle_id = 0;
  int lane_id = 0;
  double x = 0.0;  // unwrapped longitudinal position
  double v = 0.0;
  double accel = 0.0;
  std::int64_t lead_id = -1;
  double range = 0.0;
  double range_rate = 0.0;
  double dist_left_marking = 0.0;   // positive
  double dist_right_marking = 0.0;  // negative
  bool has_left_lane = false;
  bool has_right_lane = false;
  NeighborSlot left_lead;
  NeighborSlot left_rear;
  NeighborSlot right_lead;
  NeighborSlot right_rear;

  bool has_lead() const { return lead_id >= 0; }
  bool operator==(const TrajectoryRecord&) const = default;
};

struct TrajectorySegment {
  std::int64_t vehicle_id = 0;
  std::vector<TrajectoryRecord> records;
  double duration = 0.0;  // time span covered, including the last sample period
};

struct LabeledSample {
  Situation situation = Situation::FreeDriving;
  std::uint64_t state = 0;
  int action = kZeroAccel;

  bool operator==(const LabeledSample&) const = default;
};

inline Neighbor to_neighbor(const NeighborSlot& s, double ego_v) {
  Neighbor n;
  n.present = s.present();
  n.gap = s.range;
  n.speed = ego_v + s.range_rate;
  n.id = s.id;
  return n;
}

inline DrivingContext to_context(const TrajectoryRecord& r) {
  DrivingContext c;
  c.v = r.v;
  if (r.has_lead()) {
    c.lead.present = true;
    c.lead.id = r.lead_id;
    c.lead.gap = r.range;
    c.lead.speed = r.v + r.range_rate;
  }
  c.left.lane_exists = r.has_left_lane;
  c.left.lead = to_neighbor(r.left_lead, r.v);
  c.left.rear = to_neighbor(r.left_rear, r.v);
  c.right.lane_exists = r.has_right_lane;
  c.right.lead = to_neighbor(r.right_lead, r.v);
  c.right.rear = to_neighbor(r.right_rear, r.v);
  return c;
}

}  // namespace nde::ndd
