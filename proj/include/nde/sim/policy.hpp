#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>

#include "nde/core/action_space.hpp"
#include "nde/core/behavior_model.hpp"
#include "nde/core/context.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/idm.hpp"
#include "nde/sim/mobil.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/world.hpp"

namespace nde::sim {

/// Anything that answers "what does a human do in this discretised state".
/// `longitudinal` returns nullptr when the state has no usable row;
/// `lane_change` returns the probability of the lane-change action for the
/// given lane-change context state, or nullopt when unknown.
template <class S>
concept ModelSource = requires(const S& s, Situation sit, std::uint64_t st, Direction d) {
  { s.longitudinal(sit, st) } -> std::convertible_to<const ActionPmf*>;
  { s.lane_change(sit, st, d) } -> std::convertible_to<std::optional<double>>;
};

class ModelSetSource {
 public:
  explicit ModelSetSource(const ModelSet& set) : set_(&set) {}

  const ActionPmf* longitudinal(Situation s, std::uint64_t state) const {
    if (!set_->has(s)) return nullptr;
    const BehaviorRow* r = set_->get(s).find(state);
    if (r == nullptr || !r->usable() || longitudinal_mass(r->pmf) <= 0.0) return nullptr;
    return &r->pmf;
  }

  std::optional<double> lane_change(Situation s, std::uint64_t state, Direction d) const {
    if (!set_->has(s)) return std::nullopt;
    const BehaviorRow* r = set_->get(s).find(state);
    if (r == nullptr || !r->usable()) return std::nullopt;
    return r->pmf[static_cast<std::size_t>(lane_change_action(d))];
  }

 private:
  const ModelSet* set_;
};

/// Full 33-entry action distribution of a background vehicle: lane-change
/// probabilities from the context models (MOBIL when a context is not
/// covered), the remaining mass spread over the longitudinal PMF of the
/// current situation (IDM with Gaussian spread when not covered).
template <ModelSource Source>
ActionPmf nde_action_distribution(const DrivingContext& ctx, const Source& src,
                                  const ContextEncoder& enc, const SimConfig& cfg) {
  ActionPmf out{};
  std::array<double, 2> p_lc{0.0, 0.0};
  std::optional<std::optional<Direction>> mobil;
  for (Direction d : {Direction::Left, Direction::Right}) {
    const auto lc = enc.lane_change_context(ctx, d);
    if (!lc) continue;
    std::optional<double> p = src.lane_change(lc->situation, lc->state, d);
    if (!p) {
      if (!mobil) mobil = mobil_decision(ctx, cfg.road.vehicle_length, cfg.idm, cfg.mobil);
      p = (*mobil && **mobil == d) ? 1.0 : 0.0;
    }
    p_lc[static_cast<std::size_t>(d)] = std::clamp(*p, 0.0, 1.0);
  }
  const double lc_total = p_lc[0] + p_lc[1];
  if (lc_total > 1.0) {
    p_lc[0] /= lc_total;
    p_lc[1] /= lc_total;
  }
  const double rest = std::max(0.0, 1.0 - p_lc[0] - p_lc[1]);
  out[kLaneChangeLeft] = p_lc[0];
  out[kLaneChangeRight] = p_lc[1];

  const Situation s = enc.longitudinal_situation(ctx);
  const std::uint64_t state = enc.longitudinal_state(ctx);
  const ActionPmf* row = src.longitudinal(s, state);
  ActionPmf fallback;
  if (row == nullptr) {
    if (s == Situation::CarFollowing) {
      fallback = idm_fallback_pmf(ctx.v, ctx.lead.gap, ctx.lead.speed - ctx.v, cfg.idm, cfg.idm_sigma);
    } else {
      fallback = idm_fallback_pmf(ctx.v, std::nullopt, 0.0, cfg.idm, cfg.idm_sigma);
    }
    row = &fallback;
  }
  const double mass = longitudinal_mass(*row);
  for (int k = kFirstAccel; k <= kLastAccel; ++k) {
    out[static_cast<std::size_t>(k)] = rest * (*row)[static_cast<std::size_t>(k)] / mass;
  }
  return out;
}

/// Gives every longitudinal state without a usable row the fallback PMF the
/// simulator would use there (status Filled), so the model defines a
/// complete Markov chain. Crash-flagged rows stay as they are. Returns the
/// number of rows filled.
inline std::size_t fill_with_fallback(BehaviorModel& m, const SimConfig& cfg) {
  if (!is_longitudinal(m.situation())) {
    throw std::invalid_argument("only longitudinal models can be completed");
  }
  std::size_t filled = 0;
  for (std::uint64_t s = 0; s < m.num_states(); ++s) {
    const BehaviorRow* r = m.find(s);
    if (r != nullptr && (r->usable() || r->status == RowStatus::CrashExcluded)) continue;
    const auto c = m.grid().centers(s);
    const ActionPmf p = m.situation() == Situation::FreeDriving
                            ? idm_fallback_pmf(c[0], std::nullopt, 0.0, cfg.idm, cfg.idm_sigma)
                            : idm_fallback_pmf(c[0], c[1], c[2], cfg.idm, cfg.idm_sigma);
    m.set_row(s, p, r != nullptr ? r->coverage : 0, RowStatus::Filled);
    ++filled;
  }
  return filled;
}

/// Inverse-CDF draw; zero-probability entries are never returned.
inline int sample_action(const ActionPmf& p, Rng& rng) {
  const double total = row_sum(p);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last = -1;
  for (int k = 0; k < kNumActions; ++k) {
    const double pk = p[static_cast<std::size_t>(k)];
    if (pk <= 0.0) continue;
    acc += pk;
    last = k;
    if (u < acc) return k;
  }
  if (last < 0) throw std::invalid_argument("cannot sample from an all-zero distribution");
  return last;
}

struct Decision {
  double accel = 0.0;
  std::optional<Direction> lane_change;
  int action = -1;  // sampled grid action, -1 for continuous controllers
};

inline Decision decision_from_action(int action) {
  Decision d;
  d.action = action;
  if (action == kLaneChangeLeft) {
    d.lane_change = Direction::Left;
  } else if (action == kLaneChangeRight) {
    d.lane_change = Direction::Right;
  } else {
    d.accel = accel_value(action);
  }
  return d;
}

/// Background vehicle driven by sampled human behaviour. Vehicles in the
/// middle of a lane change hold their speed.
template <ModelSource Source>
class NdePolicy {
 public:
  NdePolicy(const Source& src, const SimConfig& cfg) : src_(&src), cfg_(&cfg), enc_(cfg.grid) {}

  Decision decide(const Vehicle& v, const Observation& obs, Rng& rng) const {
    if (v.lc.active) return Decision{0.0, std::nullopt, kZeroAccel};
    const ActionPmf p = nde_action_distribution(obs.ctx, *src_, enc_, *cfg_);
    return decision_from_action(sample_action(p, rng));
  }

  const ContextEncoder& encoder() const { return enc_; }

 private:
  const Source* src_;
  const SimConfig* cfg_;
  ContextEncoder enc_;
};

/// IDM car following with MOBIL lane changes. During a lane change it follows
/// the nearest lead over both occupied lanes. Used for the AV under test and
/// for the deterministic comparison environment.
class IdmMobilPolicy {
 public:
  IdmMobilPolicy(const SimConfig& cfg, IdmParams idm, MobilParams mobil)
      : cfg_(&cfg), idm_(idm), mobil_(mobil) {}
  explicit IdmMobilPolicy(const SimConfig& cfg) : IdmMobilPolicy(cfg, cfg.idm, cfg.mobil) {}

  Decision decide(const Vehicle& v, const Observation& obs, Rng& /*rng*/) const {
    const Neighbor& lead = obs.maneuver_lead;
    const bool follows = lead.present && lead.id != v.id;
    double a = follows ? idm_accel(v.v, lead.gap, lead.speed - v.v, idm_) : idm_accel(v.v, idm_);
    a = std::clamp(a, cfg_->accel_min, cfg_->accel_max);
    Decision d{a, std::nullopt, -1};
    if (!v.lc.active) {
      const DrivingContext c = with_merging_traffic(obs);
      const auto dir = mobil_decision(c, cfg_->road.vehicle_length, idm_, mobil_);
      if (dir && !blocked(c, *dir)) d.lane_change = dir;
    }
    return d;
  }

 private:
  // Vehicles two lanes over may merge into the same target lane in the same
  // step, so they are judged as if they already occupied it.
  static DrivingContext with_merging_traffic(const Observation& obs) {
    DrivingContext c = obs.ctx;
    auto nearer = [](Neighbor& n, const Neighbor& m) {
      if (m.present && (!n.present || m.gap < n.gap)) n = m;
    };
    for (auto d : {Direction::Left, Direction::Right}) {
      LaneSide& s = c.side(d);
      const LaneSide& b = obs.beyond[static_cast<std::size_t>(d)];
      if (!s.lane_exists || !b.lane_exists) continue;
      nearer(s.lead, b.lead);
      nearer(s.rear, b.rear);
    }
    return c;
  }

  static bool blocked(const DrivingContext& c, Direction d) {
    const auto& s = c.side(d);
    if (!s.lane_exists) return true;
    return (s.lead.present && s.lead.gap < 0.0) || (s.rear.present && s.rear.gap < 0.0);
  }

  const SimConfig* cfg_;
  IdmParams idm_;
  MobilParams mobil_;
};

}  // namespace nde::sim
