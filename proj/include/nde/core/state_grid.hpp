#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nde {

/// One binned dimension of a state space. Bins are left-closed, right-open
/// and cover [min, max) with width `resolution`.
struct Axis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  double resolution = 1.0;

  Axis() = default;
  Axis(std::string n, double lo, double hi, double res)
      : name(std::move(n)), min(lo), max(hi), resolution(res) {
    if (!(res > 0.0) || !(hi > lo)) {
      std::ostringstream os;
      os << "axis '" << name << "': need max > min and resolution > 0, got ["
         << lo << ", " << hi << ") res " << res;
      throw std::invalid_argument(os.str());
    }
  }

  std::size_t bins() const {
    // Guards against (max - min) / res landing a hair above an integer.
    return static_cast<std::size_t>(std::ceil((max - min) / resolution - 1e-9));
  }

  std::size_t discretize(double value) const {
    if (!(value >= min && value < max)) {
      std::ostringstream os;
      os << "value " << value << " outside axis '" << name << "' bounds [" << min
         << ", " << max << ")";
      throw std::out_of_range(os.str());
    }
    return bin_of(value);
  }

  // Out-of-range values go to the edge bins.
  std::size_t discretize_clamped(double value) const {
    if (!(value >= min)) return 0;  // also catches NaN
    if (value >= max) return bins() - 1;
    return bin_of(value);
  }

  double center(std::size_t bin) const {
    return min + (static_cast<double>(bin) + 0.5) * resolution;
  }
  double lower_edge(std::size_t bin) const {
    return min + static_cast<double>(bin) * resolution;
  }

  bool operator==(const Axis&) const = default;

 private:
  std::size_t bin_of(double value) const {
    // The 1e-9 nudge keeps values sitting exactly on an edge (e.g. 20.2 with
    // res 0.2) in the bin that edge opens.
    auto b = static_cast<std::size_t>(std::floor((value - min) / resolution + 1e-9));
    const std::size_t n = bins();
    return b >= n ? n - 1 : b;
  }
};

enum class GridKind { FreeDriving, CarFollowing, LaneChangeContext };

inline const char* to_string(GridKind k) {
  switch (k) {
    case GridKind::FreeDriving: return "FreeDriving";
    case GridKind::CarFollowing: return "CarFollowing";
    case GridKind::LaneChangeContext: return "LaneChangeContext";
  }
  return "?";
}

/// Cartesian product of axes; states are addressed by a row-major flat index
/// (last axis fastest).
class StateGrid {
 public:
  StateGrid() = default;
  StateGrid(GridKind kind, std::vector<Axis> axes) : kind_(kind), axes_(std::move(axes)) {
    if (axes_.empty()) throw std::invalid_argument("state grid needs at least one axis");
    double total = 1.0;
    for (const auto& a : axes_) total *= static_cast<double>(a.bins());
    if (total > 9.0e18) throw std::invalid_argument("state grid too large to index");
  }

  GridKind kind() const { return kind_; }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(std::size_t i) const { return axes_.at(i); }
  std::size_t dims() const { return axes_.size(); }

  std::uint64_t size() const {
    std::uint64_t n = 1;
    for (const auto& a : axes_) n *= a.bins();
    return n;
  }

  std::uint64_t flatten(std::span<const std::size_t> idx) const {
    check_dims(idx.size());
    std::uint64_t flat = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      if (idx[i] >= axes_[i].bins()) {
        throw std::out_of_range("bin index " + std::to_string(idx[i]) + " outside axis '" +
                                axes_[i].name + "'");
      }
      flat = flat * axes_[i].bins() + idx[i];
    }
    return flat;
  }

  std::vector<std::size_t> unflatten(std::uint64_t flat) const {
    if (flat >= size()) throw std::out_of_range("flat state index out of range");
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t i = axes_.size(); i-- > 0;) {
      const auto n = axes_[i].bins();
      idx[i] = static_cast<std::size_t>(flat % n);
      flat /= n;
    }
    return idx;
  }

  // Strict: throws if any coordinate is out of bounds.
  std::uint64_t encode(std::span<const double> values) const {
    check_dims(values.size());
    std::uint64_t flat = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      flat = flat * axes_[i].bins() + axes_[i].discretize(values[i]);
    }
    return flat;
  }

  std::uint64_t encode_clamped(std::span<const double> values) const {
    check_dims(values.size());
    std::uint64_t flat = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      flat = flat * axes_[i].bins() + axes_[i].discretize_clamped(values[i]);
    }
    return flat;
  }

  std::vector<double> centers(std::uint64_t flat) const {
    auto idx = unflatten(flat);
    std::vector<double> c(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) c[i] = axes_[i].center(idx[i]);
    return c;
  }

  bool operator==(const StateGrid&) const = default;

 private:
  void check_dims(std::size_t n) const {
    if (n != axes_.size()) {
      throw std::invalid_argument("expected " + std::to_string(axes_.size()) +
                                  " coordinates, got " + std::to_string(n));
    }
  }

  GridKind kind_ = GridKind::FreeDriving;
  std::vector<Axis> axes_;
};

/// A state expressed as per-axis bin indices together with its flat index.
struct DiscreteState {
  std::vector<std::size_t> indices;
  std::uint64_t flat = 0;

  static DiscreteState from_flat(const StateGrid& grid, std::uint64_t flat) {
    return {grid.unflatten(flat), flat};
  }
  static DiscreteState from_indices(const StateGrid& grid, std::vector<std::size_t> idx) {
    const auto f = grid.flatten(idx);
    return {std::move(idx), f};
  }
};

}  // namespace nde
