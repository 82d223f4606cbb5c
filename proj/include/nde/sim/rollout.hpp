#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nde/core/behavior_model.hpp"
#include "nde/markov/assemble.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/rng.hpp"

namespace nde::sim {

/// Drives one vehicle on the model's own state lattice: sample an action from
/// the current row, then a successor from the kernel's proportional
/// allocation. Returns visit counts per state over `steps` transitions
/// (the start state is not counted).
inline std::vector<std::uint64_t> lattice_rollout(const BehaviorModel& model,
                                                  const markov::Kernel& kernel,
                                                  std::uint64_t steps, std::uint64_t seed,
                                                  std::optional<std::size_t> start = std::nullopt) {
  const std::size_t n = kernel.size();
  if (model.num_states() != n) throw std::invalid_argument("model and kernel sizes differ");
  Rng rng(seed);
  std::size_t s = start ? *start : static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  if (s >= n) throw std::out_of_range("start state outside the grid");
  std::vector<std::uint64_t> visits(n, 0);
  std::vector<markov::Weighted> succ;
  for (std::uint64_t t = 0; t < steps; ++t) {
    if (!kernel.absorbing(s)) {
      const BehaviorRow* row = model.find(s);
      if (row == nullptr || !row->usable()) {
        throw std::invalid_argument("rollout reached uncovered state " + std::to_string(s));
      }
      const int a = sample_action(row->pmf, rng);
      kernel.successors(s, a, succ);
      double u = uniform01(rng);
      std::size_t next = succ.back().bin;
      for (const auto& w : succ) {
        if (u < w.weight) {
          next = w.bin;
          break;
        }
        u -= w.weight;
      }
      s = next;
    }
    ++visits[s];
  }
  return visits;
}

}  // namespace nde::sim
