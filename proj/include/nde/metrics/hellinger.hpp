#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nde/core/histogram.hpp"

namespace nde::metrics {

/// H(p, q) = sqrt(sum (sqrt p_i - sqrt q_i)^2 / 2), in [0, 1].
inline double hellinger(std::span<const double> p, std::span<const double> q,
                        double sum_tol = 1e-6) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("hellinger: grids differ (" + std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + " bins)");
  }
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > sum_tol || std::abs(sq - 1.0) > sum_tol) {
    throw std::invalid_argument("hellinger: inputs must sum to 1");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(std::max(0.0, p[i])) - std::sqrt(std::max(0.0, q[i]));
    s += d * d;
  }
  return std::min(1.0, std::sqrt(0.5 * s));
}

inline double hellinger(const std::vector<double>& p, const std::vector<double>& q) {
  return hellinger(std::span<const double>(p), std::span<const double>(q));
}

inline double hellinger(const Histogram& a, const Histogram& b) {
  if (!a.same_grid(b)) throw std::invalid_argument("hellinger: histogram grids differ");
  return hellinger(a.normalized(), b.normalized());
}

}  // namespace nde::metrics
