#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <queue>
#include <vector>

#include "nde/markov/transition.hpp"

namespace nde::markov {

struct ChainDiagnosis {
  bool irreducible = false;
  bool aperiodic = false;
  std::vector<std::vector<std::size_t>> components;  // strongly connected, sorted
  std::vector<std::uint64_t> periods;                // one per component
  std::vector<bool> closed;                          // no edge leaves the component
};

namespace detail {

// Iterative Tarjan over the support graph (entries > 0).
inline std::vector<std::vector<std::size_t>> strongly_connected(const TransitionMatrix& p) {
  const std::size_t n = p.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> comps;
  std::size_t counter = 0;
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& f = call.back();
      const auto row = p.row(f.v);
      if (f.edge < row.count) {
        const std::size_t w = row.cols[f.edge];
        const bool live = row.vals[f.edge] > 0.0;
        ++f.edge;
        if (!live) continue;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
    }
  }
  std::sort(comps.begin(), comps.end());
  return comps;
}

}  // namespace detail

/// Communicating classes of the chain and the period of each, taken as the
/// gcd of level differences along edges of a BFS tree inside the class.
inline ChainDiagnosis diagnose(const TransitionMatrix& p) {
  ChainDiagnosis d;
  d.components = detail::strongly_connected(p);
  const std::size_t n = p.size();
  std::vector<std::size_t> comp_of(n);
  for (std::size_t c = 0; c < d.components.size(); ++c) {
    for (auto v : d.components[c]) comp_of[v] = c;
  }
  constexpr std::int64_t kUnseen = -1;
  std::vector<std::int64_t> level(n, kUnseen);
  for (std::size_t c = 0; c < d.components.size(); ++c) {
    const auto& comp = d.components[c];
    std::uint64_t g = 0;
    bool closed = true;
    std::queue<std::size_t> q;
    level[comp.front()] = 0;
    q.push(comp.front());
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      const auto row = p.row(u);
      for (std::size_t k = 0; k < row.count; ++k) {
        if (!(row.vals[k] > 0.0)) continue;
        const auto w = row.cols[k];
        if (comp_of[w] != c) {
          closed = false;
          continue;
        }
        if (level[w] == kUnseen) {
          level[w] = level[u] + 1;
          q.push(w);
        } else {
          const auto diff = static_cast<std::uint64_t>(std::abs(level[u] + 1 - level[w]));
          g = std::gcd(g, diff);
        }
      }
    }
    // A singleton without a self-loop has no cycles; report period 0.
    d.periods.push_back(g);
    d.closed.push_back(closed);
  }
  d.irreducible = d.components.size() == 1;
  d.aperiodic = d.irreducible && d.periods.front() == 1;
  return d;
}

}  // namespace nde::markov
