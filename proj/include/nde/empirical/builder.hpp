#pragma once

#include <span>
#include <vector>

#include "nde/core/behavior_model.hpp"
#include "nde/empirical/counts.hpp"
#include "nde/empirical/smooth.hpp"
#include "nde/empirical/targets.hpp"
#include "nde/ndd/categorize.hpp"

namespace nde::empirical {

struct BuildResult {
  ModelSet models;
  Targets targets;
  ndd::PipelineStats stats;
  std::vector<CoverageSummary> coverage;  // one per situation, in situation order
};

/// Accumulates counts and target histograms over any number of record
/// batches, so arbitrarily long datasets can be streamed through.
class ModelBuilder {
 public:
  explicit ModelBuilder(const ndd::PipelineConfig& cfg = {})
      : cfg_(cfg), encoder_(cfg.grid), counts_(cfg.grid), targets_(cfg.grid) {}

  const ndd::PipelineConfig& config() const { return cfg_; }
  const ContextEncoder& encoder() const { return encoder_; }
  const CountSet& counts() const { return counts_; }
  const Targets& targets() const { return targets_; }
  const ndd::PipelineStats& stats() const { return stats_; }

  ndd::PipelineStats add_records(std::span<const ndd::TrajectoryRecord> records) {
    const auto& fd_axis = encoder_.grid(Situation::FreeDriving).axis(0);
    auto st = ndd::process_records(
        records, cfg_, encoder_,
        [&](const ndd::TrajectorySegment& seg) {
          for (const auto& r : seg.records) ++targets_.speed_all[fd_axis.discretize_clamped(r.v)];
        },
        [&](const ndd::LabeledSample& s) {
          counts_.add(s);
          if (s.situation == Situation::FreeDriving) ++targets_.free_speed[s.state];
          if (s.situation == Situation::CarFollowing) ++targets_.cf_joint[s.state];
        });
    stats_ += st;
    return st;
  }

  // Flags crash states in place, so repeated calls are cheap and idempotent.
  BuildResult finish(const SmoothingConfig& smoothing, double max_brake = 4.0) {
    BuildResult out;
    exclude_crash_states(counts_[Situation::CarFollowing], max_brake);
    for (auto s : kAllSituations) {
      out.models.models.emplace(s, smooth_and_normalize(counts_[s], smoothing));
      out.coverage.push_back(coverage_summary(counts_[s], smoothing.min_samples));
    }
    out.targets = targets_;
    out.stats = stats_;
    return out;
  }

 private:
  ndd::PipelineConfig cfg_;
  ContextEncoder encoder_;
  CountSet counts_;
  Targets targets_;
  ndd::PipelineStats stats_;
};

}  // namespace nde::empirical
