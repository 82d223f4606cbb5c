#pragma once

#include <optional>

#include "nde/core/context.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/idm.hpp"

namespace nde::sim {

namespace detail {

inline double idm_behind(double v, const Neighbor& lead, const IdmParams& p) {
  if (!lead.present) return idm_accel(v, p);
  return idm_accel(v, lead.gap, lead.speed - v, p);
}

}  // namespace detail

struct MobilScore {
  bool safe = false;
  double incentive = 0.0;
};

/// Incentive and safety of moving toward `d`, evaluated with plain IDM for the
/// ego, its current follower and the prospective new follower.
inline MobilScore mobil_score(const DrivingContext& c, Direction d, double vehicle_length,
                              const IdmParams& idm, const MobilParams& m) {
  const LaneSide& side = c.side(d);
  MobilScore out;
  if (!side.lane_exists) return out;
  if (side.lead.present && side.lead.gap < 0.0) return out;
  if (side.rear.present && side.rear.gap < 0.0) return out;

  const double a_ego = detail::idm_behind(c.v, c.lead, idm);
  const double a_ego_new = detail::idm_behind(c.v, side.lead, idm);

  double gain_new_follower = 0.0;
  if (side.rear.present) {
    const double vn = side.rear.speed;
    Neighbor old_lead = side.lead;
    if (old_lead.present) old_lead.gap = side.lead.gap + side.rear.gap + vehicle_length;
    const double before = detail::idm_behind(vn, old_lead, idm);
    const Neighbor ego{true, side.rear.gap, c.v, -1};
    const double after = detail::idm_behind(vn, ego, idm);
    if (after < m.safe_decel) return out;
    gain_new_follower = after - before;
  }

  double gain_old_follower = 0.0;
  if (c.rear.present && c.rear.gap >= 0.0) {
    const double vo = c.rear.speed;
    const Neighbor ego{true, c.rear.gap, c.v, -1};
    const double before = detail::idm_behind(vo, ego, idm);
    Neighbor new_lead = c.lead;
    if (new_lead.present) new_lead.gap = c.lead.gap + c.rear.gap + vehicle_length;
    const double after = detail::idm_behind(vo, new_lead, idm);
    gain_old_follower = after - before;
  }

  out.safe = true;
  out.incentive = a_ego_new - a_ego + m.politeness * (gain_new_follower + gain_old_follower);
  return out;
}

/// Lane-change decision: the direction with the larger incentive among the
/// safe ones exceeding the threshold, or none.
inline std::optional<Direction> mobil_decision(const DrivingContext& c, double vehicle_length,
                                               const IdmParams& idm, const MobilParams& m) {
  std::optional<Direction> best;
  double best_incentive = m.threshold;
  for (Direction d : {Direction::Left, Direction::Right}) {
    const MobilScore s = mobil_score(c, d, vehicle_length, idm, m);
    if (s.safe && s.incentive > best_incentive) {
      best = d;
      best_incentive = s.incentive;
    }
  }
  return best;
}

}  // namespace nde::sim
