#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nde/markov/assemble.hpp"
#include "nde/markov/stationary.hpp"
#include "nde/metrics/accident.hpp"
#include "nde/metrics/hellinger.hpp"
#include "nde/metrics/traffic.hpp"
#include "nde/sim/episode.hpp"
#include "nde/sim/rollout.hpp"

using namespace nde;
using namespace nde::metrics;

TEST(Hellinger, IdenticalIsZero) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(hellinger(p, p), 0.0);
}

TEST(Hellinger, DisjointIsOne) {
  EXPECT_DOUBLE_EQ(hellinger(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
}

TEST(Hellinger, FormulaOracle) {
  const std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  const double a = std::sqrt(0.5) - std::sqrt(0.9);
  const double b = std::sqrt(0.5) - std::sqrt(0.1);
  EXPECT_NEAR(hellinger(p, q), std::sqrt(a * a + b * b) / std::sqrt(2.0), 1e-15);
}

TEST(Hellinger, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(7), q(7);
    for (auto& x : p) x = u(rng) < 0.3 ? 0.0 : u(rng);
    for (auto& x : q) x = u(rng);
    p[0] += 0.1;
    const double sp = std::accumulate(p.begin(), p.end(), 0.0);
    const double sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    const double h = hellinger(p, q);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    EXPECT_DOUBLE_EQ(h, hellinger(q, p));
    EXPECT_GT(h, 0.0);
  }
}

TEST(Hellinger, RejectsMismatchedOrUnnormalised) {
  EXPECT_THROW(hellinger(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(hellinger(std::vector<double>{0.6, 0.6}, std::vector<double>{0.5, 0.5}), std::invalid_argument);
  auto a = Histogram::uniform(0, 1, 0.5);
  auto b = Histogram::uniform(0, 1, 0.25);
  a.add(0.1);
  b.add(0.1);
  EXPECT_THROW(hellinger(a, b), std::invalid_argument);
}

TEST(CollectHistograms, ConstantSpeedAndPlatoonArePointMasses) {
  sim::SimConfig cfg;
  cfg.warmup = 0.0;
  cfg.collection = 10.0;
  sim::World w{cfg};
  for (int k = 0; k < 10; ++k) {
    sim::Vehicle v;
    v.id = k;
    v.lane = 1;
    v.x = 35.0 * k;  // 30 m gaps with 5 m vehicles
    v.v = 30.0;
    w.add(v);
  }
  struct Hold {
    sim::Decision decide(const sim::Vehicle&, const sim::Observation&, sim::Rng&) const { return {}; }
  };
  sim::Rng rng(0);
  const auto stats = sim::run_traffic(w, Hold{}, rng);
  std::vector<sim::TrafficStats> runs{stats, stats};
  const auto h = collect_histograms(runs);
  const auto vel = h.velocity.normalized();
  const auto rng_h = h.range.normalized();
  EXPECT_NEAR(std::accumulate(vel.begin(), vel.end(), 0.0), 1.0, 1e-9);
  EXPECT_NEAR(std::accumulate(rng_h.begin(), rng_h.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(vel[static_cast<std::size_t>(h.velocity.bin_of(30.0))], 1.0);
  // Nine vehicles follow at 30 m; the last one's lead is 1180 m away.
  EXPECT_EQ(rng_h[static_cast<std::size_t>(h.range.bin_of(30.0))], 1.0);
  EXPECT_EQ(h.velocity.total(), 2u * 10u * 100u);
  EXPECT_EQ(h.range.total(), 2u * 9u * 100u);
  EXPECT_THROW(collect_histograms(std::span<const sim::TrafficStats>{}), std::invalid_argument);
}

TEST(CollectHistograms, LatticeRolloutMatchesStationaryLaw) {
  BehaviorModel m(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    ActionPmf p{};
    double tot = 0.0;
    for (int k = kZeroAccel - 3; k <= kZeroAccel + 3; ++k) {
      p[static_cast<std::size_t>(k)] = 0.2 + u(gen);
      tot += p[static_cast<std::size_t>(k)];
    }
    for (auto& x : p) x /= tot;
    m.set_row(s, p, 100, RowStatus::Covered);
  }
  const markov::FreeDrivingKernel k(m.grid(), 1.0);
  const auto pi = markov::stationary(markov::assemble(m, k), 1e-13).pi;
  const auto visits = sim::lattice_rollout(m, k, 200000, 11);
  Histogram h = Histogram::uniform(20.0, 40.0, 0.2);
  for (std::size_t s = 0; s < visits.size(); ++s) h.add(m.grid().axis(0).center(s), visits[s]);
  EXPECT_LE(hellinger(h.normalized(), pi), 0.05);
}

TEST(LaneChangeRate, Arithmetic) {
  const auto r = lane_change_rate(100.0, 20);
  EXPECT_DOUBLE_EQ(r.km_per_lane_change, 5.0);
  EXPECT_FALSE(r.no_lane_changes);
  const auto z = lane_change_rate(100.0, 0);
  EXPECT_TRUE(z.no_lane_changes);
  EXPECT_TRUE(std::isinf(z.km_per_lane_change));
  EXPECT_THROW(lane_change_rate(-1.0, 2), std::invalid_argument);
}

TEST(AccidentRate, RateFromCounts) {
  const auto r = accident_rate(276, 5'000'000);
  EXPECT_DOUBLE_EQ(r.estimate, 5.52e-5);
  EXPECT_LT(r.ci_low, r.estimate);
  EXPECT_GT(r.ci_high, r.estimate);
}

TEST(AccidentRate, ZeroEvents) {
  const auto r = accident_rate(0, 1000);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.ci_low, 0.0);
  const auto cp = accident_rate(0, 10, 0.9, CiMethod::ClopperPearson);
  EXPECT_EQ(cp.ci_low, 0.0);
  EXPECT_NEAR(cp.ci_high, 1.0 - std::pow(0.05, 0.1), 1e-12);
}

TEST(AccidentRate, NormalIntervalFormula) {
  const auto r = accident_rate(3, 1000);
  EXPECT_DOUBLE_EQ(r.estimate, 0.003);
  const double half = 1.6448536269514722 * std::sqrt(0.003 * 0.997 / 1000.0);
  EXPECT_NEAR(r.ci_low, 0.003 - half, 1e-12);
  EXPECT_NEAR(r.ci_high, 0.003 + half, 1e-12);
  EXPECT_THROW(accident_rate(0, 0), std::invalid_argument);
  EXPECT_THROW(accident_rate(5, 3), std::invalid_argument);
  const bool arr[4] = {true, false, false, true};
  EXPECT_DOUBLE_EQ(accident_rate(std::span<const bool>(arr, 4)).estimate, 0.5);
}

TEST(AccidentRate, ClopperPearsonBracketsEstimate) {
  // m = 1 of 10: lower bound solves P(X >= 1) = 0.05, i.e. 1 - (1 - p)^10 = 0.05.
  const auto r = accident_rate(1, 10, 0.9, CiMethod::ClopperPearson);
  EXPECT_NEAR(r.ci_low, 1.0 - std::pow(0.95, 0.1), 1e-12);
  EXPECT_LT(r.ci_low, 0.1);
  EXPECT_GT(r.ci_high, 0.1);
  const auto all = accident_rate(10, 10, 0.9, CiMethod::ClopperPearson);
  EXPECT_EQ(all.ci_high, 1.0);
}

TEST(AccidentRate, NormalIntervalCoverage) {
  std::mt19937_64 rng(2026);
  std::binomial_distribution<std::uint64_t> b(10000, 0.01);
  int covered = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto r = accident_rate(b(rng), 10000);
    covered += (r.ci_low <= 0.01 && 0.01 <= r.ci_high) ? 1 : 0;
  }
  EXPECT_GE(covered, 880);
}
