#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include "nde/core/behavior_model.hpp"
#include "nde/empirical/counts.hpp"

namespace nde::empirical {

/// Centered moving average over the 31 acceleration entries. Each bin's mass
/// is spread evenly over the window positions that exist, so windows are
/// truncated at -4 and +2 m/s^2 and the total acceleration mass is kept.
/// Lane-change entries are left alone.
inline ActionPmf smooth_accels(const ActionPmf& in, int window) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("smoothing window must be odd and >= 1, got " +
                                std::to_string(window));
  }
  if (window == 1) return in;
  const int h = window / 2;
  ActionPmf out = in;
  for (int k = kFirstAccel; k <= kLastAccel; ++k) out[static_cast<std::size_t>(k)] = 0.0;
  for (int k = kFirstAccel; k <= kLastAccel; ++k) {
    const double m = in[static_cast<std::size_t>(k)];
    if (m == 0.0) continue;
    const int lo = std::max(kFirstAccel, k - h);
    const int hi = std::min(kLastAccel, k + h);
    const double share = m / static_cast<double>(hi - lo + 1);
    for (int j = lo; j <= hi; ++j) out[static_cast<std::size_t>(j)] += share;
  }
  return out;
}

inline ActionPmf normalize(const ActionPmf& p) {
  const double s = row_sum(p);
  if (!(s > 0.0)) throw std::invalid_argument("cannot normalize an all-zero row");
  ActionPmf q{};
  for (std::size_t a = 0; a < p.size(); ++a) q[a] = p[a] / s;
  return q;
}

inline ActionPmf to_pmf(const ActionCounts& c) {
  ActionPmf p{};
  for (std::size_t a = 0; a < c.size(); ++a) p[a] = static_cast<double>(c[a]);
  return p;
}

struct SmoothingConfig {
  int window = 5;
  std::uint64_t min_samples = BehaviorModel::kDefaultMinSamples;
};

/// Normalised, smoothed model from raw counts. Only rows with at least
/// min_samples observations are stored (as covered); crash-flagged states
/// that were observed carry an all-zero row. Everything else is implicitly
/// uncovered. With `keep_uncovered` the thin rows are stored as well,
/// normalised but unsmoothed.
inline BehaviorModel smooth_and_normalize(const CountTable& counts, const SmoothingConfig& cfg,
                                          bool keep_uncovered = false) {
  if (cfg.window < 1 || cfg.window % 2 == 0) {
    throw std::invalid_argument("smoothing window must be odd and >= 1, got " +
                                std::to_string(cfg.window));
  }
  BehaviorModel m(counts.situation(), counts.grid(), cfg.min_samples);
  counts.for_each_row([&](std::uint64_t s, const ActionCounts& c) {
    const auto cov = coverage(c);
    if (counts.is_crash(s)) {
      m.set_row(s, ActionPmf{}, cov, RowStatus::CrashExcluded);
      return;
    }
    if (cov == 0) return;
    if (cov < cfg.min_samples) {
      if (keep_uncovered) m.set_row(s, normalize(to_pmf(c)), cov, RowStatus::Uncovered);
      return;
    }
    m.set_row(s, normalize(smooth_accels(normalize(to_pmf(c)), cfg.window)), cov,
              RowStatus::Covered);
  });
  return m;
}

struct CoverageSummary {
  Situation situation = Situation::FreeDriving;
  std::uint64_t grid_states = 0;
  std::uint64_t observed_states = 0;
  std::uint64_t covered_states = 0;
  std::uint64_t crash_states = 0;
  std::uint64_t samples = 0;
  std::uint64_t covered_samples = 0;
};

inline CoverageSummary coverage_summary(const CountTable& counts, std::uint64_t min_samples) {
  CoverageSummary out;
  out.situation = counts.situation();
  out.grid_states = counts.grid().size();
  out.crash_states = counts.crash_count();
  counts.for_each_row([&](std::uint64_t s, const ActionCounts& c) {
    const auto cov = coverage(c);
    ++out.observed_states;
    out.samples += cov;
    if (cov >= min_samples && !counts.is_crash(s)) {
      ++out.covered_states;
      out.covered_samples += cov;
    }
  });
  return out;
}

inline BehaviorModel smooth_and_normalize(const CountTable& counts, int window) {
  SmoothingConfig cfg;
  cfg.window = window;
  return smooth_and_normalize(counts, cfg);
}

}  // namespace nde::empirical
