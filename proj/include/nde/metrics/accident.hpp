#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

namespace nde::metrics {

enum class CiMethod { Normal, ClopperPearson };

struct RateEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t m = 0;  // events
  std::uint64_t n = 0;  // trials
  double confidence = 0.9;
  CiMethod method = CiMethod::Normal;
};

inline const char* to_string(CiMethod m) {
  return m == CiMethod::Normal ? "normal" : "clopper-pearson";
}

/// Event rate m/n with a two-sided confidence interval. The normal
/// approximation is p +- z sqrt(p(1-p)/n), clipped to [0, 1].
inline RateEstimate accident_rate(std::uint64_t m, std::uint64_t n, double confidence = 0.9,
                                  CiMethod method = CiMethod::Normal) {
  if (n == 0) throw std::invalid_argument("accident_rate: no trials");
  if (m > n) throw std::invalid_argument("accident_rate: more events than trials");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("accident_rate: confidence must be in (0, 1)");
  }
  RateEstimate r;
  r.m = m;
  r.n = n;
  r.confidence = confidence;
  r.method = method;
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  r.estimate = md / nd;
  const double alpha = 1.0 - confidence;
  if (method == CiMethod::Normal) {
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    const double half = z * std::sqrt(r.estimate * (1.0 - r.estimate) / nd);
    r.ci_low = std::max(0.0, r.estimate - half);
    r.ci_high = std::min(1.0, r.estimate + half);
  } else {
    r.ci_low = m == 0 ? 0.0 : boost::math::ibeta_inv(md, nd - md + 1.0, alpha / 2.0);
    r.ci_high = m == n ? 1.0 : boost::math::ibeta_inv(md + 1.0, nd - md, 1.0 - alpha / 2.0);
  }
  return r;
}

inline RateEstimate accident_rate(std::span<const bool> outcomes, double confidence = 0.9,
                                  CiMethod method = CiMethod::Normal) {
  const auto m = static_cast<std::uint64_t>(std::count(outcomes.begin(), outcomes.end(), true));
  return accident_rate(m, outcomes.size(), confidence, method);
}

}  // namespace nde::metrics
