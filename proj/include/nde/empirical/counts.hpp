#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <numeric>
#include <span>
#include <unordered_set>
#include <vector>

#include "nde/core/context.hpp"
#include "nde/core/situation.hpp"
#include "nde/ndd/trajectory.hpp"

namespace nde::empirical {

using ActionCounts = std::array<std::uint64_t, kNumActions>;

inline std::uint64_t coverage(const ActionCounts& c) {
  return std::accumulate(c.begin(), c.end(), std::uint64_t{0});
}

/// Open-addressing map from 64-bit keys to 32-bit counts. Lane-change
/// context grids are far too large for dense rows, and most observed states
/// carry only one or two distinct actions, so counts are stored per
/// (state, action) pair.
class FlatCounter {
 public:
  static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

  void add(std::uint64_t key, std::uint64_t n) {
    if (key == kEmpty) throw std::out_of_range("reserved key");
    if ((size_ + 1) * 10 > slots_.size() * 7) grow();
    Slot& s = probe(key);
    if (s.key == kEmpty) {
      s.key = key;
      ++size_;
    }
    const std::uint64_t sum = s.count + n;
    if (sum > std::numeric_limits<std::uint32_t>::max()) throw std::overflow_error("count overflow");
    s.count = static_cast<std::uint32_t>(sum);
  }

  std::uint64_t get(std::uint64_t key) const {
    if (slots_.empty()) return 0;
    std::size_t i = hash(key) & (slots_.size() - 1);
    for (;;) {
      const Slot& s = slots_[i];
      if (s.key == key) return s.count;
      if (s.key == kEmpty) return 0;
      i = (i + 1) & (slots_.size() - 1);
    }
  }

  std::size_t size() const { return size_; }

  // Entries sorted by key.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    out.reserve(size_);
    for (const Slot& s : slots_) {
      if (s.key != kEmpty) out.emplace_back(s.key, s.count);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const Slot& s : slots_) {
      if (s.key != kEmpty) f(s.key, static_cast<std::uint64_t>(s.count));
    }
  }

 private:
#pragma pack(push, 4)
  struct Slot {
    std::uint64_t key = kEmpty;
    std::uint32_t count = 0;
  };
#pragma pack(pop)

  static std::size_t hash(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ULL;
    k ^= k >> 33;
    return static_cast<std::size_t>(k);
  }

  Slot& probe(std::uint64_t key) {
    std::size_t i = hash(key) & (slots_.size() - 1);
    for (;;) {
      Slot& s = slots_[i];
      if (s.key == key || s.key == kEmpty) return s;
      i = (i + 1) & (slots_.size() - 1);
    }
  }

  void grow() {
    std::vector<Slot> old;
    old.swap(slots_);
    slots_.assign(old.empty() ? 64 : old.size() * 2, Slot{});
    for (const Slot& s : old) {
      if (s.key == kEmpty) continue;
      Slot& d = probe(s.key);
      d = s;
    }
  }

  std::vector<Slot> slots_;
  std::size_t size_ = 0;
};

/// Raw action counts for one situation, keyed by flat state index. States
/// flagged as inevitable crashes keep their counts for reporting but never
/// become model rows.
class CountTable {
 public:
  CountTable() = default;
  CountTable(Situation s, StateGrid g) : situation_(s), grid_(std::move(g)) {}

  Situation situation() const { return situation_; }
  const StateGrid& grid() const { return grid_; }

  void add(std::uint64_t state, int action, std::uint64_t n = 1) {
    if (action < 0 || action >= kNumActions) throw std::out_of_range("action index out of range");
    if (state >= grid_.size()) throw std::out_of_range("state outside count grid");
    counts_.add(state * kNumActions + static_cast<std::uint64_t>(action), n);
  }

  std::uint64_t count(std::uint64_t state, int action) const {
    return counts_.get(state * kNumActions + static_cast<std::uint64_t>(action));
  }

  ActionCounts row(std::uint64_t state) const {
    ActionCounts c{};
    for (int a = 0; a < kNumActions; ++a) c[static_cast<std::size_t>(a)] = count(state, a);
    return c;
  }

  std::uint64_t coverage(std::uint64_t state) const { return empirical::coverage(row(state)); }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    counts_.for_each([&](std::uint64_t, std::uint64_t c) { t += c; });
    return t;
  }

  /// Calls f(state, counts) for every observed state in ascending order.
  template <class F>
  void for_each_row(F&& f) const {
    const auto entries = counts_.sorted();
    std::size_t i = 0;
    while (i < entries.size()) {
      const std::uint64_t state = entries[i].first / kNumActions;
      ActionCounts c{};
      while (i < entries.size() && entries[i].first / kNumActions == state) {
        c[static_cast<std::size_t>(entries[i].first % kNumActions)] += entries[i].second;
        ++i;
      }
      f(state, c);
    }
  }

  std::vector<std::uint64_t> states() const {
    std::vector<std::uint64_t> s;
    for_each_row([&](std::uint64_t st, const ActionCounts&) { s.push_back(st); });
    return s;
  }

  std::size_t stored_rows() const { return states().size(); }

  void flag_crash(std::uint64_t state) { crash_.insert(state); }
  bool is_crash(std::uint64_t state) const { return crash_.count(state) != 0; }
  std::size_t crash_count() const { return crash_.size(); }

  void merge(const CountTable& o) {
    if (!(grid_ == o.grid_) || situation_ != o.situation_) {
      throw std::invalid_argument("cannot merge count tables over different grids");
    }
    o.counts_.for_each([&](std::uint64_t k, std::uint64_t c) { counts_.add(k, c); });
    crash_.insert(o.crash_.begin(), o.crash_.end());
  }

 private:
  Situation situation_ = Situation::FreeDriving;
  StateGrid grid_;
  FlatCounter counts_;
  std::unordered_set<std::uint64_t> crash_;
};

struct CountSet {
  std::array<CountTable, 6> tables;

  explicit CountSet(const GridConfig& g = {}) {
    for (auto s : kAllSituations) tables[index(s)] = CountTable(s, make_grid(s, g));
  }

  static std::size_t index(Situation s) { return static_cast<std::size_t>(s); }
  CountTable& operator[](Situation s) { return tables[index(s)]; }
  const CountTable& operator[](Situation s) const { return tables[index(s)]; }

  void add(const ndd::LabeledSample& s) { (*this)[s.situation].add(s.state, s.action); }

  void merge(const CountSet& o) {
    for (std::size_t i = 0; i < tables.size(); ++i) tables[i].merge(o.tables[i]);
  }
};

inline CountSet count_actions(std::span<const ndd::LabeledSample> samples,
                              const GridConfig& g = {}) {
  CountSet c(g);
  for (const auto& s : samples) c.add(s);
  return c;
}

/// True when the gap closes even if the follower brakes at `max_brake` from
/// now on while the lead keeps its speed: with closing speed -rr the range
/// bottoms out at r - rr^2 / (2 * max_brake).
inline bool inevitable_crash(double r, double rr, double max_brake = 4.0) {
  if (!(rr < 0.0)) return r <= 0.0;
  return r <= rr * rr / (2.0 * max_brake);
}

/// Flags car-following states whose bin centre is an inevitable crash.
/// Returns the number of flagged states.
inline std::size_t exclude_crash_states(CountTable& table, double max_brake = 4.0) {
  const auto& g = table.grid();
  if (g.kind() != GridKind::CarFollowing) {
    throw std::invalid_argument("crash exclusion applies to the car-following grid");
  }
  const auto& ra = g.axis(1);
  const auto& rra = g.axis(2);
  std::size_t n = 0;
  for (std::uint64_t s = 0; s < g.size(); ++s) {
    const auto rb = (s / rra.bins()) % ra.bins();
    const auto rrb = s % rra.bins();
    if (inevitable_crash(ra.center(rb), rra.center(rrb), max_brake)) {
      table.flag_crash(s);
      ++n;
    }
  }
  return n;
}

inline std::vector<bool> crash_mask(const StateGrid& g, double max_brake = 4.0) {
  std::vector<bool> m(g.size(), false);
  const auto& ra = g.axis(1);
  const auto& rra = g.axis(2);
  for (std::uint64_t s = 0; s < g.size(); ++s) {
    const auto rb = (s / rra.bins()) % ra.bins();
    const auto rrb = s % rra.bins();
    m[s] = inevitable_crash(ra.center(rb), rra.center(rrb), max_brake);
  }
  return m;
}

}  // namespace nde::empirical
