#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nde/empirical/counts.hpp"
#include "nde/empirical/targets.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/world.hpp"

namespace nde::sim {

/// Samplers for the initial traffic state: a speed and, given the follower
/// speed, a (gap, range rate) pair for a car-following successor.
struct InitDistributions {
  std::function<double(Rng&)> speed;
  std::function<std::pair<double, double>(double, Rng&)> follow;
};

class InitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Draws a bin index proportionally to `weights` (at least one positive).
inline std::size_t draw_bin(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

inline std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    c[i] = acc;
  }
  return c;
}

}  // namespace detail

/// Speeds from the recorded speed histogram and follower gaps from the
/// car-following joint histogram restricted to the follower's speed bin (the
/// pooled histogram when that bin is empty). Values are uniform within the
/// drawn bin.
inline InitDistributions distributions_from_targets(const empirical::Targets& t) {
  const StateGrid fd = make_grid(Situation::FreeDriving, t.grid);
  const StateGrid cf = make_grid(Situation::CarFollowing, t.grid);
  std::vector<double> speed_w(t.speed_all.begin(), t.speed_all.end());
  if (std::all_of(speed_w.begin(), speed_w.end(), [](double x) { return x <= 0.0; })) {
    throw InitError("speed histogram is empty; build models from data first");
  }
  const std::size_t nv = cf.axis(0).bins();
  const std::size_t per_v = cf.size() / nv;
  std::vector<std::vector<double>> follow_cdf(nv);
  std::vector<double> pooled(per_v, 0.0);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    std::vector<double> w(per_v);
    double tot = 0.0;
    for (std::size_t k = 0; k < per_v; ++k) {
      w[k] = static_cast<double>(t.cf_joint[iv * per_v + k]);
      pooled[k] += w[k];
      tot += w[k];
    }
    if (tot > 0.0) follow_cdf[iv] = detail::cumulative(w);
  }
  if (std::all_of(pooled.begin(), pooled.end(), [](double x) { return x <= 0.0; })) {
    throw InitError("car-following histogram is empty; build models from data first");
  }
  auto pooled_cdf = std::make_shared<std::vector<double>>(detail::cumulative(pooled));
  auto speed_cdf = std::make_shared<std::vector<double>>(detail::cumulative(speed_w));
  auto cdfs = std::make_shared<std::vector<std::vector<double>>>(std::move(follow_cdf));

  InitDistributions d;
  d.speed = [fd, speed_cdf](Rng& rng) {
    const std::size_t b = detail::draw_bin(*speed_cdf, rng);
    const Axis& a = fd.axis(0);
    return a.lower_edge(b) + a.resolution * uniform01(rng);
  };
  d.follow = [cf, cdfs, pooled_cdf](double v, Rng& rng) {
    const Axis& av = cf.axis(0);
    const std::size_t iv = av.discretize_clamped(v);
    const auto& cdf = (*cdfs)[iv].empty() ? *pooled_cdf : (*cdfs)[iv];
    const std::size_t k = detail::draw_bin(cdf, rng);
    const std::size_t nrr = cf.axis(2).bins();
    const std::size_t ir = k / nrr;
    const std::size_t irr = k % nrr;
    const Axis& ar = cf.axis(1);
    const Axis& arr = cf.axis(2);
    const double r = ar.lower_edge(ir) + ar.resolution * uniform01(rng);
    const double rr = arr.lower_edge(irr) + arr.resolution * uniform01(rng);
    return std::pair<double, double>{r, rr};
  };
  return d;
}

struct InitStats {
  std::size_t vehicles = 0;
  std::size_t cf_pairs = 0;
  std::size_t free_pairs = 0;
  std::size_t resamples = 0;
};

/// Fills every lane of an empty ring lane by lane: a first vehicle at
/// U(0, d0), then successors either in a car-following relation (probability
/// p_cf, gap and range rate from `follow`) or beyond the observation range
/// with a fresh speed. Pairs that overlap, leave the speed range or are an
/// inevitable crash are redrawn.
inline InitStats init_world(World& w, const InitDistributions& dist, Rng& rng,
                            std::int64_t first_id = 0, double max_brake = 4.0) {
  const SimConfig& cfg = w.config();
  const double len = cfg.road.vehicle_length;
  const double c = cfg.road.length;
  const double vmax = std::nextafter(cfg.speed_max, cfg.speed_min);
  InitStats st;
  std::int64_t id = first_id;
  auto draw_speed = [&]() {
    for (int attempt = 0; attempt < cfg.init.resample_limit; ++attempt) {
      const double v = dist.speed(rng);
      if (v >= cfg.speed_min && v <= vmax) return v;
      ++st.resamples;
    }
    throw InitError("speed sampler never produced a speed in range");
  };

  for (int lane = 0; lane < cfg.road.lanes; ++lane) {
    struct Placed {
      double x, v;
      bool cf;
    };
    std::vector<Placed> lane_vehicles;
    const double x0 = cfg.init.d0 * uniform01(rng);
    lane_vehicles.push_back({x0, draw_speed(), false});
    for (;;) {
      const Placed& prev = lane_vehicles.back();
      Placed next{};
      bool ok = false;
      if (uniform01(rng) < cfg.init.p_cf) {
        for (int attempt = 0; attempt < cfg.init.resample_limit; ++attempt) {
          const auto [r, rr] = dist.follow(prev.v, rng);
          const double v = prev.v + rr;
          if (r >= 0.0 && v >= cfg.speed_min && v <= vmax &&
              !empirical::inevitable_crash(r, rr, max_brake)) {
            next = {prev.x + len + r, v, true};
            ok = true;
            break;
          }
          ++st.resamples;
        }
        if (!ok) throw InitError("could not draw a feasible car-following pair");
      } else {
        next = {prev.x + len + cfg.init.d_obs + cfg.init.d0 * uniform01(rng), draw_speed(), false};
      }
      // The ring closes on the first vehicle of the lane.
      const double closing_gap = x0 + c - next.x - len;
      if (closing_gap < 0.0) break;
      lane_vehicles.push_back(next);
    }
    // The last vehicle follows the first one around the ring.
    while (lane_vehicles.size() > 1) {
      const Placed& last = lane_vehicles.back();
      const double gap = x0 + c - last.x - len;
      if (!empirical::inevitable_crash(gap, lane_vehicles.front().v - last.v, max_brake)) break;
      lane_vehicles.pop_back();
    }
    for (std::size_t k = 0; k < lane_vehicles.size(); ++k) {
      const Placed& p = lane_vehicles[k];
      if (k > 0) (p.cf ? st.cf_pairs : st.free_pairs) += 1;
      Vehicle v;
      v.id = id++;
      v.lane = lane;
      v.x = p.x;
      v.v = p.v;
      w.add(v);
      ++st.vehicles;
    }
  }
  return st;
}

/// Evenly spaced platoons with jittered positions and uniform speeds; used
/// when no data is available yet (synthetic data generation).
inline InitStats init_uniform(World& w, std::size_t count, double v_lo, double v_hi, Rng& rng,
                              std::int64_t first_id = 0) {
  const SimConfig& cfg = w.config();
  const auto lanes = static_cast<std::size_t>(cfg.road.lanes);
  InitStats st;
  std::int64_t id = first_id;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const std::size_t n = count / lanes + (lane < count % lanes ? 1 : 0);
    if (n == 0) continue;
    const double spacing = cfg.road.length / static_cast<double>(n);
    if (spacing < 2.0 * cfg.road.vehicle_length) {
      throw InitError("too many vehicles for the road length");
    }
    const double offset = spacing * uniform01(rng);
    const double jitter = 0.5 * (spacing - 2.0 * cfg.road.vehicle_length);
    for (std::size_t k = 0; k < n; ++k) {
      Vehicle v;
      v.id = id++;
      v.lane = static_cast<int>(lane);
      v.x = offset + spacing * static_cast<double>(k) + jitter * (uniform01(rng) - 0.5);
      v.v = v_lo + (v_hi - v_lo) * uniform01(rng);
      w.add(v);
      ++st.vehicles;
    }
  }
  return st;
}

}  // namespace nde::sim
