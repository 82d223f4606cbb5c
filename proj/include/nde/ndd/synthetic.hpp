#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nde/core/action_space.hpp"
#include "nde/core/context.hpp"
#include "nde/core/situation.hpp"
#include "nde/ndd/trajectory.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/episode.hpp"
#include "nde/sim/idm.hpp"
#include "nde/sim/init.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/world.hpp"

namespace nde::ndd {

/// Closed-form driver used to synthesise naturalistic data. Longitudinal
/// behaviour: a two-component Gaussian mixture around an IDM mean evaluated at
/// the state's bin centre, cut to the acceleration grid. Lane changes: a
/// logistic per-step probability in the lane-change context features.
struct GroundTruthSpec {
  sim::IdmParams idm{1.0, 33.0, 4.0, 1.5, 2.0, 1.2};
  double sigma_narrow = 0.8;
  double sigma_wide = 1.5;
  double wide_weight = 0.2;

  double lc_scale = 1.0;  // multiplies every lane-change probability; 0 disables them
  double lc_max = 0.5;
  double base_free = -5.5;        // no target-lane vehicle
  double base_one_adjacent = -6.0;
  double base_cut_in = -6.0;
  double base_two_adjacent = -6.5;
  double right_bias = -0.5;
  double w_closing = 0.25;        // per m/s the current lead is slower
  double w_proximity = 1.5;       // lead within 60 m
  double w_advantage = 0.1;       // per m/s the target lead is faster than the current lead
  double w_target_lead_gap = 3.0; // penalty, target lead within 20 m
  double w_target_rear_gap = 3.0; // penalty, target rear within 15 m
  double w_rear_closing = 0.5;    // per m/s the target rear is faster
};

class GroundTruth {
 public:
  explicit GroundTruth(GroundTruthSpec spec = {}, const GridConfig& grid = {})
      : spec_(spec), enc_(grid) {
    const StateGrid& fd = enc_.grid(Situation::FreeDriving);
    free_.resize(fd.size());
    for (std::uint64_t s = 0; s < fd.size(); ++s) {
      free_[s] = accel_pmf(fd.centers(s)[0], std::nullopt, 0.0);
    }
    const StateGrid& cf = enc_.grid(Situation::CarFollowing);
    follow_.resize(cf.size());
    for (std::uint64_t s = 0; s < cf.size(); ++s) {
      const auto c = cf.centers(s);
      follow_[s] = accel_pmf(c[0], c[1], c[2]);
    }
  }

  const GroundTruthSpec& spec() const { return spec_; }
  const ContextEncoder& encoder() const { return enc_; }

  const ActionPmf* longitudinal(Situation s, std::uint64_t state) const {
    if (s == Situation::FreeDriving) return state < free_.size() ? &free_[state] : nullptr;
    if (s == Situation::CarFollowing) return state < follow_.size() ? &follow_[state] : nullptr;
    return nullptr;
  }

  std::optional<double> lane_change(Situation s, std::uint64_t state, Direction d) const {
    if (is_longitudinal(s)) return std::nullopt;
    return lane_change_probability(s, state, d);
  }

  double lane_change_probability(Situation s, std::uint64_t state, Direction d) const {
    if (spec_.lc_scale <= 0.0) return 0.0;
    const auto c = enc_.grid(s).centers(state);
    // c: dir, v, v_lead, r_lead, then (speed, gap) of the target-lane vehicles.
    const double v = c[1];
    const double v_lead = c[2];
    const double r_lead = c[3];
    double logit = 0.0;
    switch (s) {
      case Situation::FreeLaneChange: logit = spec_.base_free; break;
      case Situation::LcOneAdjacent: logit = spec_.base_one_adjacent; break;
      case Situation::CutIn: logit = spec_.base_cut_in; break;
      case Situation::LcTwoAdjacent: logit = spec_.base_two_adjacent; break;
      default: return 0.0;
    }
    if (d == Direction::Right) logit += spec_.right_bias;
    logit += spec_.w_closing * (v - v_lead);
    logit += spec_.w_proximity * std::max(0.0, 1.0 - r_lead / 60.0);
    auto target_lead = [&](double speed, double gap) {
      logit += spec_.w_advantage * (speed - v_lead);
      logit -= spec_.w_target_lead_gap * std::max(0.0, 1.0 - gap / 20.0);
    };
    auto target_rear = [&](double speed, double gap) {
      logit -= spec_.w_target_rear_gap * std::max(0.0, 1.0 - gap / 15.0);
      logit -= spec_.w_rear_closing * std::max(0.0, speed - v);
    };
    if (s == Situation::LcOneAdjacent) target_lead(c[4], c[5]);
    if (s == Situation::CutIn) target_rear(c[4], c[5]);
    if (s == Situation::LcTwoAdjacent) {
      target_lead(c[4], c[5]);
      target_rear(c[6], c[7]);
    }
    const double p = 1.0 / (1.0 + std::exp(-logit));
    return std::min(spec_.lc_max, spec_.lc_scale * p);
  }

  /// Longitudinal PMF at continuous (v, gap, rr); no gap means free road.
  ActionPmf accel_pmf(double v, std::optional<double> gap, double rr) const {
    const double mean = std::clamp(sim::idm_accel(v, gap, rr, spec_.idm), kMinAccel, kMaxAccel);
    const double h = 0.5 * kAccelResolution;
    ActionPmf p{};
    double total = 0.0;
    for (int k = kFirstAccel; k <= kLastAccel; ++k) {
      const double a = accel_value(k);
      auto cell = [&](double sigma) {
        return sim::normal_cdf((a + h - mean) / sigma) - sim::normal_cdf((a - h - mean) / sigma);
      };
      const double m = (1.0 - spec_.wide_weight) * cell(spec_.sigma_narrow) +
                       spec_.wide_weight * cell(spec_.sigma_wide);
      p[static_cast<std::size_t>(k)] = m;
      total += m;
    }
    for (auto& x : p) x /= total;
    return p;
  }

 private:
  GroundTruthSpec spec_;
  ContextEncoder enc_;
  std::vector<ActionPmf> free_;
  std::vector<ActionPmf> follow_;
};

struct GeneratorConfig {
  sim::SimConfig sim;
  std::size_t vehicles = 60;
  double chunk_seconds = 900.0;
  double warmup = 300.0;  // unrecorded settling time per chunk
  double v_lo = 26.0;
  double v_hi = 34.0;
};

struct GeneratorStats {
  std::uint64_t rows = 0;
  std::uint64_t chunks = 0;
  std::uint64_t respawns = 0;
  std::uint64_t lane_changes = 0;
};

namespace detail {

// Moves a crashed vehicle to the middle of the widest gap on the road under a
// fresh id, so that its recorded track ends at the crash.
inline void respawn(sim::World& w, std::size_t i, std::int64_t new_id) {
  const auto& cfg = w.config();
  const auto& vs = w.vehicles();
  double best_gap = -1.0;
  int best_lane = 0;
  double best_x = 0.0;
  double best_v = 0.5 * (cfg.speed_min + cfg.speed_max);
  for (int lane = 0; lane < cfg.road.lanes; ++lane) {
    std::vector<std::size_t> in;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      if (j != i && vs[j].active && vs[j].occupies(lane)) in.push_back(j);
    }
    if (in.empty()) {
      if (cfg.road.length > best_gap) {
        best_gap = cfg.road.length;
        best_lane = lane;
        best_x = 0.0;
      }
      continue;
    }
    std::sort(in.begin(), in.end(), [&](std::size_t a, std::size_t b) { return vs[a].x < vs[b].x; });
    for (std::size_t k = 0; k < in.size(); ++k) {
      const auto& rear = vs[in[k]];
      const auto& lead = vs[in[(k + 1) % in.size()]];
      double gap = w.ahead(rear, lead);
      if (gap <= 0.0) gap += cfg.road.length;
      if (gap > best_gap) {
        best_gap = gap;
        best_lane = lane;
        best_x = rear.x + 0.5 * gap + 0.5 * cfg.road.vehicle_length;
        best_v = 0.5 * (rear.v + lead.v);
      }
    }
  }
  sim::Vehicle& v = w.vehicles()[i];
  v.id = new_id;
  v.lane = best_lane;
  v.x = w.wrap(best_x);
  v.v = best_v;
  v.lc = sim::Maneuver{};
  v.active = true;
}

}  // namespace detail

/// Simulates traffic in which every vehicle follows `truth` and hands the
/// recorded trajectories to `sink(std::vector<TrajectoryRecord>&&)` one
/// chunk at a time, sorted by (vehicle_id, time). Vehicle ids never repeat
/// across chunks. Exactly round(hours * 3600 / dt) records are written per
/// vehicle slot.
template <class Sink>
GeneratorStats generate_synthetic_ndd(const GroundTruth& truth, const GeneratorConfig& gc,
                                      double hours, std::uint64_t seed, Sink&& sink) {
  if (!(hours > 0.0)) throw std::invalid_argument("duration must be positive");
  if (gc.vehicles == 0) throw std::invalid_argument("need at least one vehicle");
  if (!(gc.chunk_seconds > 0.0)) throw std::invalid_argument("chunk length must be positive");
  const sim::SimConfig& cfg = gc.sim;
  cfg.validate();
  const auto total_steps = static_cast<std::uint64_t>(std::llround(hours * 3600.0 / cfg.dt));
  const auto chunk_steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(gc.chunk_seconds / cfg.dt)));
  const auto warm_steps = static_cast<std::uint64_t>(std::llround(gc.warmup / cfg.dt));
  constexpr std::int64_t kIdStride = 1'000'000'000;

  const sim::NdePolicy<GroundTruth> policy(truth, cfg);
  GeneratorStats stats;
  std::uint64_t done = 0;
  for (std::uint64_t chunk = 0; done < total_steps; ++chunk) {
    const std::uint64_t steps = std::min(chunk_steps, total_steps - done);
    sim::Rng rng(sim::derive_seed(seed, chunk));
    sim::World w(cfg);
    const std::int64_t first_id = static_cast<std::int64_t>(chunk) * kIdStride;
    sim::init_uniform(w, gc.vehicles, gc.v_lo, gc.v_hi, rng, first_id);
    std::int64_t next_id = first_id + static_cast<std::int64_t>(gc.vehicles);
    sim::Stepper stepper;
    auto decide = [&](std::size_t, const sim::Vehicle& v, const sim::Observation& o, sim::Rng& r) {
      return policy.decide(v, o, r);
    };
    auto handle = [&](const std::vector<sim::Collision>& cs) {
      std::vector<std::size_t> hit;
      for (const auto& c : cs) {
        hit.push_back(c.a);
        hit.push_back(c.b);
      }
      std::sort(hit.begin(), hit.end());
      hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
      for (std::size_t i : hit) {
        detail::respawn(w, i, next_id++);
        ++stats.respawns;
      }
    };
    for (std::uint64_t t = 0; t < warm_steps; ++t) handle(stepper.step(w, rng, decide));
    w.set_time(static_cast<double>(done) * cfg.dt);

    std::map<std::int64_t, std::vector<TrajectoryRecord>> tracks;
    for (std::uint64_t t = 0; t < steps; ++t) {
      const auto& cs = stepper.step(w, rng, decide,
                                    [&](std::size_t i, const sim::Observation& o, const sim::Decision& d) {
        const auto& v = w.vehicles()[i];
        tracks[v.id].push_back(w.record(i, o, d.accel));
        if (d.lane_change && !v.lc.active) ++stats.lane_changes;
      });
      handle(cs);
    }
    std::vector<TrajectoryRecord> rows;
    rows.reserve(steps * gc.vehicles);
    for (auto& [id, recs] : tracks) {
      rows.insert(rows.end(), recs.begin(), recs.end());
    }
    tracks.clear();
    stats.rows += rows.size();
    ++stats.chunks;
    done += steps;
    sink(std::move(rows));
  }
  return stats;
}

}  // namespace nde::ndd
