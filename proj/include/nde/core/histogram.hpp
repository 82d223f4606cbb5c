#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nde {

struct Histogram {
  std::vector<double> edges;  // ascending, size = counts.size() + 1
  std::vector<std::uint64_t> counts;
  std::uint64_t out_of_range = 0;

  static Histogram uniform(double lo, double hi, double width) {
    if (!(width > 0.0) || !(hi > lo)) throw std::invalid_argument("bad histogram bounds");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
    Histogram h;
    h.edges.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges.back() = hi;
    h.counts.assign(n, 0);
    return h;
  }

  std::size_t bins() const { return counts.size(); }

  // Bin of `value`, or -1 when outside [edges.front(), edges.back()).
  long bin_of(double value) const {
    if (edges.size() < 2 || !(value >= edges.front()) || !(value < edges.back())) return -1;
    const double width = (edges.back() - edges.front()) / static_cast<double>(bins());
    auto b = static_cast<long>(std::floor((value - edges.front()) / width + 1e-9));
    if (b >= static_cast<long>(bins())) b = static_cast<long>(bins()) - 1;
    // Non-uniform edges fall back to a linear walk.
    while (b > 0 && value < edges[static_cast<std::size_t>(b)]) --b;
    while (b + 1 < static_cast<long>(bins()) && value >= edges[static_cast<std::size_t>(b) + 1]) ++b;
    return b;
  }

  void add(double value, std::uint64_t n = 1) {
    const long b = bin_of(value);
    if (b < 0) {
      out_of_range += n;
      return;
    }
    counts[static_cast<std::size_t>(b)] += n;
  }

  std::uint64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }

  std::vector<double> normalized() const {
    std::vector<double> p(counts.size(), 0.0);
    const auto t = total();
    if (t == 0) return p;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      p[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
    }
    return p;
  }

  bool same_grid(const Histogram& o) const { return edges == o.edges; }

  void merge(const Histogram& o) {
    if (!same_grid(o)) throw std::invalid_argument("histogram grids differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    out_of_range += o.out_of_range;
  }
};

}  // namespace nde
