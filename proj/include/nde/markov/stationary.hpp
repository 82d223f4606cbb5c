#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "nde/markov/transition.hpp"

namespace nde::markov {

struct StationaryResult {
  std::vector<double> pi;
  double residual = 0.0;  // ||pi^T P - pi^T||_1
  std::uint64_t iterations = 0;
  bool converged = false;
};

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

inline double stationarity_residual(const TransitionMatrix& p, const std::vector<double>& pi) {
  return l1_distance(p.left_multiply(pi), pi);
}

/// Power iteration from the uniform vector. On non-convergence the iterate
/// with the smallest residual is returned with converged = false.
inline StationaryResult stationary(const TransitionMatrix& p, double tol = 1e-12,
                                   std::uint64_t max_iters = 1'000'000) {
  const std::size_t n = p.size();
  StationaryResult res;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> best = pi;
  double best_res = std::numeric_limits<double>::infinity();
  for (std::uint64_t it = 0; it <= max_iters; ++it) {
    auto next = p.left_multiply(pi);
    const double r = l1_distance(next, pi);
    if (r < best_res) {
      best_res = r;
      best = pi;
    }
    if (r <= tol) {
      res.pi = std::move(pi);
      res.residual = r;
      res.iterations = it;
      res.converged = true;
      return res;
    }
    // Renormalise against drift.
    const double s = std::accumulate(next.begin(), next.end(), 0.0);
    for (auto& x : next) x /= s;
    pi = std::move(next);
  }
  res.pi = std::move(best);
  res.residual = best_res;
  res.iterations = max_iters;
  res.converged = false;
  return res;
}

}  // namespace nde::markov
