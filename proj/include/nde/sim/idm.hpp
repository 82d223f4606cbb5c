#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "nde/core/action_space.hpp"
#include "nde/sim/config.hpp"
#include "nde/sim/rng.hpp"

namespace nde::sim {

/// Intelligent driver model. `gap` is the bumper-to-bumper distance to the
/// lead and `rr` the range rate (lead speed minus own speed); no lead means
/// free-road acceleration.
inline double idm_accel(double v, std::optional<double> gap, double rr, const IdmParams& p) {
  const double free = 1.0 - std::pow(std::max(v, 0.0) / p.v0, p.delta);
  if (!gap) return p.a_max * free;
  const double s_star = p.s0 + std::max(0.0, v * p.T - v * rr / (2.0 * std::sqrt(p.a_max * p.b)));
  const double s = std::max(*gap, 1e-3);
  const double ratio = s_star / s;
  return p.a_max * (free - ratio * ratio);
}

inline double idm_accel(double v, const IdmParams& p) { return idm_accel(v, std::nullopt, 0.0, p); }

inline double stochastic_idm_accel(double v, std::optional<double> gap, double rr,
                                   const IdmParams& p, double sigma, Rng& rng,
                                   double a_min = kMinAccel, double a_max = kMaxAccel) {
  const double noise = std::normal_distribution<double>(0.0, sigma)(rng);
  return std::clamp(idm_accel(v, gap, rr, p) + noise, a_min, a_max);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Discretised Gaussian around `mean`, clamped to the acceleration range:
/// each grid point gets the mass of its 0.2 m/s^2 cell, the two end points
/// absorb the tails. Lane-change entries are zero.
inline ActionPmf gaussian_accel_pmf(double mean, double sigma) {
  ActionPmf p{};
  if (!(sigma > 0.0)) {
    p[static_cast<std::size_t>(accel_to_action(std::clamp(mean, kMinAccel, kMaxAccel)))] = 1.0;
    return p;
  }
  const double h = 0.5 * kAccelResolution;
  double prev = 0.0;
  for (int k = kFirstAccel; k <= kLastAccel; ++k) {
    const double upper = k == kLastAccel ? 1.0 : normal_cdf((accel_value(k) + h - mean) / sigma);
    p[static_cast<std::size_t>(k)] = std::max(0.0, upper - prev);
    prev = upper;
  }
  return p;
}

/// Longitudinal fallback for states the data does not cover: IDM mean with
/// Gaussian spread.
inline ActionPmf idm_fallback_pmf(double v, std::optional<double> gap, double rr,
                                  const IdmParams& p, double sigma) {
  const double mean = std::clamp(idm_accel(v, gap, rr, p), kMinAccel, kMaxAccel);
  return gaussian_accel_pmf(mean, sigma);
}

}  // namespace nde::sim
