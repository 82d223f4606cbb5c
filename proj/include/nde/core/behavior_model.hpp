#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nde/core/action_space.hpp"
#include "nde/core/situation.hpp"
#include "nde/core/state_grid.hpp"

namespace nde {

enum class RowStatus : std::uint8_t {
  Covered = 0,
  Uncovered = 1,      // fewer than min_samples observations; fallback applies
  CrashExcluded = 2,  // inevitable-crash state; fallback applies
  Filled = 3,         // no data; row holds the fallback driver's PMF
};

inline const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Covered: return "covered";
    case RowStatus::Uncovered: return "uncovered";
    case RowStatus::CrashExcluded: return "crash";
    case RowStatus::Filled: return "filled";
  }
  return "?";
}

inline RowStatus row_status_from_string(const std::string& s) {
  if (s == "covered") return RowStatus::Covered;
  if (s == "uncovered") return RowStatus::Uncovered;
  if (s == "crash") return RowStatus::CrashExcluded;
  if (s == "filled") return RowStatus::Filled;
  throw std::invalid_argument("unknown row status '" + s + "'");
}

struct BehaviorRow {
  ActionPmf pmf{};
  std::uint64_t coverage = 0;
  RowStatus status = RowStatus::Uncovered;

  bool usable() const { return status == RowStatus::Covered || status == RowStatus::Filled; }
};

inline double row_sum(const ActionPmf& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

inline double longitudinal_mass(const ActionPmf& p) {
  return std::accumulate(p.begin() + kFirstAccel, p.begin() + kLastAccel + 1, 0.0);
}

/// Conditional action PMFs for one driving situation: row s is P(a | s).
/// Rows are stored sparsely; states that never appear are implicitly
/// uncovered with zero coverage.
class BehaviorModel {
 public:
  static constexpr std::uint64_t kDefaultMinSamples = 50;

  BehaviorModel() = default;
  BehaviorModel(Situation situation, StateGrid grid,
                std::uint64_t min_samples = kDefaultMinSamples)
      : situation_(situation), grid_(std::move(grid)), min_samples_(min_samples) {}

  Situation situation() const { return situation_; }
  const StateGrid& grid() const { return grid_; }
  std::uint64_t min_samples() const { return min_samples_; }
  std::uint64_t num_states() const { return grid_.size(); }

  const BehaviorRow* find(std::uint64_t state) const {
    auto it = rows_.find(state);
    return it == rows_.end() ? nullptr : &it->second;
  }

  bool covered(std::uint64_t state) const {
    const auto* r = find(state);
    return r != nullptr && r->usable();
  }

  BehaviorRow& row(std::uint64_t state) {
    if (state >= grid_.size()) throw std::out_of_range("state outside model grid");
    return rows_[state];
  }

  const BehaviorRow& at(std::uint64_t state) const {
    const auto* r = find(state);
    if (r == nullptr) {
      throw std::out_of_range("no row for state " + std::to_string(state) + " in " +
                              to_string(situation_) + " model");
    }
    return *r;
  }

  void set_row(std::uint64_t state, const ActionPmf& pmf, std::uint64_t coverage,
               RowStatus status) {
    auto& r = row(state);
    r.pmf = pmf;
    r.coverage = coverage;
    r.status = status;
  }

  // Sorted so that iteration (and serialization) order is deterministic.
  std::vector<std::uint64_t> states() const {
    std::vector<std::uint64_t> s;
    s.reserve(rows_.size());
    for (const auto& [k, _] : rows_) s.push_back(k);
    std::sort(s.begin(), s.end());
    return s;
  }

  std::size_t stored_rows() const { return rows_.size(); }

  std::vector<std::uint64_t> uncovered_states() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = 0; s < grid_.size(); ++s) {
      if (!covered(s)) out.push_back(s);
    }
    return out;
  }

  // Throws if a covered row is not a PMF within tol.
  void validate(double tol = 1e-9) const {
    for (const auto& [s, r] : rows_) {
      if (!r.usable()) continue;
      const double sum = row_sum(r.pmf);
      const double lo = *std::min_element(r.pmf.begin(), r.pmf.end());
      if (std::abs(sum - 1.0) > tol || lo < 0.0) {
        throw std::logic_error("row " + std::to_string(s) + " of " + to_string(situation_) +
                               " model is not a PMF (sum " + std::to_string(sum) + ")");
      }
    }
  }

 private:
  Situation situation_ = Situation::FreeDriving;
  StateGrid grid_;
  std::uint64_t min_samples_ = kDefaultMinSamples;
  std::unordered_map<std::uint64_t, BehaviorRow> rows_;
};

/// The six situation models an NDE is assembled from.
struct ModelSet {
  std::map<Situation, BehaviorModel> models;

  const BehaviorModel& get(Situation s) const {
    auto it = models.find(s);
    if (it == models.end()) {
      throw std::out_of_range(std::string("model set lacks ") + to_string(s));
    }
    return it->second;
  }
  BehaviorModel& get(Situation s) { return models.at(s); }
  bool has(Situation s) const { return models.count(s) != 0; }
};

}  // namespace nde
