#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nde/core/behavior_model.hpp"
#include "nde/core/situation.hpp"
#include "nde/empirical/counts.hpp"
#include "nde/markov/transition.hpp"

namespace nde::markov {

struct Weighted {
  std::size_t bin;
  double weight;
};

/// Splits a continuous coordinate between the two bin centres around it,
/// each receiving mass proportional to its proximity. Values beyond the
/// outermost centres land wholly in the edge bin. Returns 1 or 2 entries.
inline int allocate(const Axis& axis, double value, Weighted out[2]) {
  const std::size_t n = axis.bins();
  const double u = (value - axis.center(0)) / axis.resolution;
  if (!(u > 0.0)) {
    out[0] = {0, 1.0};
    return 1;
  }
  if (u >= static_cast<double>(n - 1)) {
    out[0] = {n - 1, 1.0};
    return 1;
  }
  const double lo = std::floor(u);
  double frac = u - lo;
  auto b = static_cast<std::size_t>(lo);
  // Accelerations times dt rarely land exactly on a centre in floating point.
  constexpr double kSnap = 1e-9;
  if (frac < kSnap) {
    out[0] = {b, 1.0};
    return 1;
  }
  if (frac > 1.0 - kSnap) {
    out[0] = {b + 1, 1.0};
    return 1;
  }
  out[0] = {b, 1.0 - frac};
  out[1] = {b + 1, frac};
  return 2;
}

/// One-step successor distribution of (state, action) for a longitudinal
/// model. Lane-change actions keep the state, matching zero acceleration
/// during a manoeuvre.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::size_t size() const = 0;
  virtual double dt_mc() const = 0;
  // Absorbing states ignore the model and map onto themselves.
  virtual bool absorbing(std::size_t) const { return false; }
  virtual void successors(std::size_t state, int action, std::vector<Weighted>& out) const = 0;
};

class FreeDrivingKernel final : public Kernel {
 public:
  FreeDrivingKernel(StateGrid grid, double dt_mc) : grid_(std::move(grid)), dt_(dt_mc) {
    if (grid_.dims() != 1) throw std::invalid_argument("free-driving grid must be 1-D");
    if (!(dt_ > 0.0)) throw std::invalid_argument("dt_mc must be positive");
  }
  std::size_t size() const override { return grid_.size(); }
  double dt_mc() const override { return dt_; }
  const StateGrid& grid() const { return grid_; }

  void successors(std::size_t state, int action, std::vector<Weighted>& out) const override {
    out.clear();
    if (is_lane_change(action)) {
      out.push_back({state, 1.0});
      return;
    }
    const auto& ax = grid_.axis(0);
    Weighted w[2];
    const int k = allocate(ax, ax.center(state) + accel_value(action) * dt_, w);
    out.assign(w, w + k);
  }

 private:
  StateGrid grid_;
  double dt_;
};

/// Steady-state car following: the lead holds its speed, so the successor
/// of (v, r, rr) under acceleration a is (v + a dt, r + rr dt, rr - a dt),
/// allocated trilinearly over the three axes.
class CarFollowingKernel final : public Kernel {
 public:
  CarFollowingKernel(StateGrid grid, double dt_mc, double max_brake = 4.0)
      : grid_(std::move(grid)), dt_(dt_mc) {
    if (grid_.dims() != 3) throw std::invalid_argument("car-following grid must be 3-D");
    if (!(dt_ > 0.0)) throw std::invalid_argument("dt_mc must be positive");
    crash_ = empirical::crash_mask(grid_, max_brake);
  }
  std::size_t size() const override { return grid_.size(); }
  double dt_mc() const override { return dt_; }
  bool absorbing(std::size_t s) const override { return crash_[s]; }
  const StateGrid& grid() const { return grid_; }
  const std::vector<bool>& crash() const { return crash_; }

  void successors(std::size_t state, int action, std::vector<Weighted>& out) const override {
    out.clear();
    if (crash_[state] || is_lane_change(action)) {
      out.push_back({state, 1.0});
      return;
    }
    const auto& av = grid_.axis(0);
    const auto& ar = grid_.axis(1);
    const auto& arr = grid_.axis(2);
    const std::size_t nr = ar.bins(), nrr = arr.bins();
    const std::size_t iv = state / (nr * nrr);
    const std::size_t ir = (state / nrr) % nr;
    const std::size_t irr = state % nrr;
    const double a = accel_value(action);
    const double v = av.center(iv), r = ar.center(ir), rr = arr.center(irr);
    Weighted wv[2], wr[2], wrr[2];
    const int kv = allocate(av, v + a * dt_, wv);
    const int kr = allocate(ar, r + rr * dt_, wr);
    const int krr = allocate(arr, rr - a * dt_, wrr);
    for (int x = 0; x < kv; ++x) {
      for (int y = 0; y < kr; ++y) {
        for (int z = 0; z < krr; ++z) {
          out.push_back({(wv[x].bin * nr + wr[y].bin) * nrr + wrr[z].bin,
                         wv[x].weight * wr[y].weight * wrr[z].weight});
        }
      }
    }
  }

 private:
  StateGrid grid_;
  double dt_;
  std::vector<bool> crash_;
};

class UncoveredRowsError : public std::invalid_argument {
 public:
  UncoveredRowsError(std::vector<std::uint64_t> states, const std::string& what)
      : std::invalid_argument(what), states_(std::move(states)) {}
  const std::vector<std::uint64_t>& states() const { return states_; }

 private:
  std::vector<std::uint64_t> states_;
};

inline void require_covered(const BehaviorModel& f, const Kernel& k) {
  std::vector<std::uint64_t> missing;
  for (std::size_t s = 0; s < k.size(); ++s) {
    if (!k.absorbing(s) && !f.covered(s)) missing.push_back(s);
  }
  if (missing.empty()) return;
  std::string list;
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
    list += (i ? ", " : "") + std::to_string(missing[i]);
  }
  if (missing.size() > 10) list += ", ...";
  throw UncoveredRowsError(missing, std::to_string(missing.size()) + " uncovered " +
                                        to_string(f.situation()) + " states (" + list +
                                        "); fill them before assembling");
}

/// P = G(F): each row mixes the successor distributions of the 33 actions,
/// weighted by the model's action probabilities.
inline TransitionMatrix assemble(const BehaviorModel& f, const Kernel& k) {
  if (f.num_states() != k.size()) throw std::invalid_argument("model and kernel grids differ");
  require_covered(f, k);
  TransitionMatrix p(k.size(), k.dt_mc());
  std::map<std::size_t, double> acc;
  std::vector<Weighted> succ;
  for (std::size_t s = 0; s < k.size(); ++s) {
    if (k.absorbing(s)) {
      p.append_row({{s, 1.0}});
      continue;
    }
    acc.clear();
    const auto& pmf = f.at(s).pmf;
    for (int a = 0; a < kNumActions; ++a) {
      const double pa = pmf[static_cast<std::size_t>(a)];
      if (pa == 0.0) continue;
      k.successors(s, a, succ);
      for (const auto& w : succ) acc[w.bin] += pa * w.weight;
    }
    p.append_row(std::vector<std::pair<std::size_t, double>>(acc.begin(), acc.end()));
  }
  return p;
}

inline TransitionMatrix assemble_free_driving(const BehaviorModel& f, double dt_mc = 1.0) {
  return assemble(f, FreeDrivingKernel(f.grid(), dt_mc));
}

inline TransitionMatrix assemble_car_following(const BehaviorModel& f, double dt_mc = 1.0,
                                               double max_brake = 4.0) {
  return assemble(f, CarFollowingKernel(f.grid(), dt_mc, max_brake));
}

}  // namespace nde::markov
