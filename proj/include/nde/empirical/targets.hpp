#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nde/core/situation.hpp"
#include "nde/empirical/counts.hpp"

namespace nde::empirical {

/// Data-derived state distributions: the refinement targets for the two
/// longitudinal models and the inputs of the data-driven initialisation.
struct Targets {
  GridConfig grid;
  std::vector<std::uint64_t> free_speed;  // free-driving samples on the free-driving speed grid
  std::vector<std::uint64_t> cf_joint;    // car-following samples on the (v, r, rr) grid
  std::vector<std::uint64_t> speed_all;   // every segmented record, free-driving speed grid

  Targets() : Targets(GridConfig{}) {}
  explicit Targets(const GridConfig& g) : grid(g) {
    free_speed.assign(make_grid(Situation::FreeDriving, g).size(), 0);
    cf_joint.assign(make_grid(Situation::CarFollowing, g).size(), 0);
    speed_all.assign(free_speed.size(), 0);
  }

  void merge(const Targets& o) {
    if (o.free_speed.size() != free_speed.size() || o.cf_joint.size() != cf_joint.size()) {
      throw std::invalid_argument("target grids differ");
    }
    for (std::size_t i = 0; i < free_speed.size(); ++i) free_speed[i] += o.free_speed[i];
    for (std::size_t i = 0; i < cf_joint.size(); ++i) cf_joint[i] += o.cf_joint[i];
    for (std::size_t i = 0; i < speed_all.size(); ++i) speed_all[i] += o.speed_all[i];
  }
};

// Add-one smoothing keeps every bin strictly positive.
inline std::vector<double> laplace_normalize(const std::vector<std::uint64_t>& counts,
                                             const std::vector<bool>* excluded = nullptr) {
  std::vector<double> p(counts.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (excluded != nullptr && (*excluded)[i]) continue;
    p[i] = static_cast<double>(counts[i]) + 1.0;
    total += p[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("nothing to normalize");
  for (auto& x : p) x /= total;
  return p;
}

inline std::vector<double> free_driving_target(const Targets& t) {
  return laplace_normalize(t.free_speed);
}

/// Joint car-following target; inevitable-crash states get zero mass.
inline std::vector<double> car_following_target(const Targets& t, double max_brake = 4.0) {
  const auto mask = crash_mask(make_grid(Situation::CarFollowing, t.grid), max_brake);
  return laplace_normalize(t.cf_joint, &mask);
}

}  // namespace nde::empirical
