#pragma once

#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "nde/core/context.hpp"
#include "nde/ndd/lane_change.hpp"
#include "nde/ndd/segment.hpp"
#include "nde/ndd/trajectory.hpp"

namespace nde::ndd {

struct PipelineConfig {
  SegmentConfig segment;
  LaneChangeDetectorConfig lane_change;
  GridConfig grid;
};

/// Turns segmented trajectories into labelled samples and hands each one to
/// `sink`. Every decision point yields one longitudinal sample (free driving
/// or car following, labelled with the recorded acceleration) plus one
/// exposure sample for each lane-change context that is open at that moment,
/// so lane-change rows estimate the per-step probability of changing lanes.
/// At a lane-change start only the context samples are emitted, labelled
/// with the lane-change action. Samples inside a manoeuvre are skipped.
template <typename Sink>
void categorize(const std::vector<TrajectorySegment>& segments,
                const std::vector<LaneChangeEvent>& events, const ContextEncoder& encoder,
                Sink&& sink) {
  std::unordered_map<std::int64_t, std::vector<const LaneChangeEvent*>> by_vehicle;
  for (const auto& e : events) by_vehicle[e.vehicle_id].push_back(&e);
  constexpr double kTimeTol = 1e-6;

  for (const auto& seg : segments) {
    auto it = by_vehicle.find(seg.vehicle_id);
    const std::vector<const LaneChangeEvent*>* evs = it == by_vehicle.end() ? nullptr : &it->second;
    for (const auto& r : seg.records) {
      const LaneChangeEvent* starting = nullptr;
      bool inside = false;
      if (evs != nullptr) {
        for (const auto* e : *evs) {
          if (std::abs(r.time - e->start_time) < kTimeTol) {
            starting = e;
          } else if (r.time > e->start_time && r.time < e->end_time - kTimeTol) {
            inside = true;
          }
        }
      }
      if (inside && starting == nullptr) continue;

      const DrivingContext ctx = to_context(r);
      if (starting != nullptr) {
        const int action = lane_change_action(starting->direction);
        for (auto d : {Direction::Left, Direction::Right}) {
          if (auto lc = encoder.lane_change_context(ctx, d)) {
            sink(LabeledSample{lc->situation, lc->state, action});
          }
        }
        continue;
      }

      const int action = accel_to_action(r.accel);
      sink(LabeledSample{encoder.longitudinal_situation(ctx), encoder.longitudinal_state(ctx),
                         action});
      for (auto d : {Direction::Left, Direction::Right}) {
        if (auto lc = encoder.lane_change_context(ctx, d)) {
          sink(LabeledSample{lc->situation, lc->state, action});
        }
      }
    }
  }
}

inline std::vector<LabeledSample> categorize(const std::vector<TrajectorySegment>& segments,
                                             const std::vector<LaneChangeEvent>& events,
                                             const ContextEncoder& encoder) {
  std::vector<LabeledSample> out;
  categorize(segments, events, encoder, [&](const LabeledSample& s) { out.push_back(s); });
  return out;
}

struct PipelineStats {
  std::uint64_t records = 0;
  std::uint64_t segments = 0;
  std::uint64_t segmented_records = 0;
  std::uint64_t lane_changes = 0;
  std::uint64_t samples = 0;

  PipelineStats& operator+=(const PipelineStats& o) {
    records += o.records;
    segments += o.segments;
    segmented_records += o.segmented_records;
    lane_changes += o.lane_changes;
    samples += o.samples;
    return *this;
  }
};

/// Full ingestion pass over a sorted record batch: tracks, lane-change
/// detection, segmentation and categorisation. `on_segment` sees every kept
/// segment (used for target distributions), `on_sample` every labelled sample.
template <typename SegmentFn, typename SampleFn>
PipelineStats process_records(std::span<const TrajectoryRecord> records,
                              const PipelineConfig& cfg, const ContextEncoder& encoder,
                              SegmentFn&& on_segment, SampleFn&& on_sample) {
  PipelineStats st;
  st.records = records.size();
  std::vector<LaneChangeEvent> events;
  for (const auto& t : split_tracks(records, cfg.segment)) {
    auto ev = detect_lane_changes(t, cfg.lane_change);
    events.insert(events.end(), ev.begin(), ev.end());
  }
  st.lane_changes = events.size();
  const auto segs = segment(records, cfg.segment);
  st.segments = segs.size();
  for (const auto& s : segs) {
    st.segmented_records += s.records.size();
    on_segment(s);
  }
  categorize(segs, events, encoder, [&](const LabeledSample& s) {
    ++st.samples;
    on_sample(s);
  });
  return st;
}

}  // namespace nde::ndd
