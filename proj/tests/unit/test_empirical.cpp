#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nde/empirical/builder.hpp"
#include "nde/empirical/counts.hpp"
#include "nde/empirical/serialize.hpp"
#include "nde/empirical/smooth.hpp"
#include "nde/empirical/targets.hpp"
#include "nde/metrics/hellinger.hpp"

using namespace nde;
using namespace nde::empirical;

namespace {

// Max-brake kinematics stepped forward in time: true when the range hits
// zero while the gap is still closing.
bool brute_force_crash(double v, double r, double rr, double brake = 4.0) {
  const double dt = 1e-4;
  double ego = v;
  const double lead = v + rr;
  double range = r;
  if (range <= 0.0) return true;
  for (int i = 0; i < 10'000'000; ++i) {
    const double closing = lead - ego;
    if (closing >= 0.0) return false;
    const double next_ego = std::max(0.0, ego - brake * dt);
    range += 0.5 * ((lead - ego) + (lead - next_ego)) * dt;
    ego = next_ego;
    if (range <= 0.0) return true;
  }
  return false;
}

std::vector<double> as_vector(const ActionPmf& p) { return {p.begin(), p.end()}; }

}  // namespace

TEST(Counts, RowCounts) {
  const std::vector<ndd::LabeledSample> samples{{Situation::FreeDriving, 4, 21},
                                                {Situation::FreeDriving, 4, 21},
                                                {Situation::FreeDriving, 4, 22}};
  const auto c = count_actions(samples);
  const auto row = c[Situation::FreeDriving].row(4);
  EXPECT_EQ(row[21], 2u);
  EXPECT_EQ(row[22], 1u);
  EXPECT_EQ(coverage(row), 3u);
  EXPECT_EQ(c[Situation::FreeDriving].coverage(5), 0u);
  EXPECT_EQ(c[Situation::FreeDriving].stored_rows(), 1u);
}

TEST(Counts, EmptyInputGivesEmptyTables) {
  const auto c = count_actions({});
  for (auto s : kAllSituations) {
    EXPECT_EQ(c[s].total(), 0u);
    EXPECT_EQ(c[s].stored_rows(), 0u);
  }
}

TEST(Counts, RejectsBadIndices) {
  CountTable t(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  EXPECT_THROW(t.add(0, 33), std::out_of_range);
  EXPECT_THROW(t.add(100, 3), std::out_of_range);
}

TEST(Counts, MergeAddsCounts) {
  CountTable a(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  CountTable b = a;
  a.add(3, 10, 5);
  b.add(3, 10, 2);
  b.add(9, 1, 1);
  a.merge(b);
  EXPECT_EQ(a.count(3, 10), 7u);
  EXPECT_EQ(a.count(9, 1), 1u);
  EXPECT_EQ(a.states(), (std::vector<std::uint64_t>{3, 9}));
  CountTable other(Situation::CarFollowing, make_grid(Situation::CarFollowing, GridConfig{}));
  EXPECT_THROW(a.merge(other), std::invalid_argument);
}

TEST(FlatCounter, ManyKeysSurviveGrowth) {
  FlatCounter f;
  for (std::uint64_t k = 0; k < 50000; ++k) f.add(k * 7919, k % 5 + 1);
  EXPECT_EQ(f.size(), 50000u);
  for (std::uint64_t k = 0; k < 50000; k += 997) EXPECT_EQ(f.get(k * 7919), k % 5 + 1);
  EXPECT_EQ(f.get(3), 0u);
  const auto s = f.sorted();
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
}

TEST(CrashStates, SpecExamples) {
  EXPECT_TRUE(inevitable_crash(1.0, -10.0));
  EXPECT_FALSE(inevitable_crash(100.0, 0.0));
  for (double r : {0.5, 10.0, 80.0}) EXPECT_FALSE(inevitable_crash(r, 5.0));
}

TEST(CrashStates, MatchKinematicIntegration) {
  for (double r : {0.5, 2.0, 5.5, 12.0, 12.6, 30.0}) {
    for (double rr : {-9.5, -7.0, -4.5, -1.5, 0.5}) {
      // Skip the knife edge where the step size matters.
      if (std::abs(r - rr * rr / 8.0) < 0.05) continue;
      EXPECT_EQ(inevitable_crash(r, rr), brute_force_crash(30.0, r, rr)) << r << " " << rr;
    }
  }
}

TEST(CrashStates, FlagsCarFollowingBins) {
  CountSet c;
  auto& cf = c[Situation::CarFollowing];
  const auto& g = cf.grid();
  const std::vector<double> crash{30.0, 1.0, -10.0};
  const std::vector<double> safe{30.0, 100.0, 0.0};
  const auto sc = g.encode(crash);
  const auto ss = g.encode(safe);
  cf.add(sc, 5, 100);
  cf.add(ss, 5, 100);
  const auto flagged = exclude_crash_states(cf);
  EXPECT_TRUE(cf.is_crash(sc));
  EXPECT_FALSE(cf.is_crash(ss));
  EXPECT_GT(flagged, 0u);
  const auto m = smooth_and_normalize(cf, 5);
  EXPECT_EQ(m.at(sc).status, RowStatus::CrashExcluded);
  EXPECT_EQ(row_sum(m.at(sc).pmf), 0.0);
  EXPECT_TRUE(m.covered(ss));
  EXPECT_THROW(exclude_crash_states(c[Situation::FreeDriving]), std::invalid_argument);
}

TEST(Smooth, WindowOneIsNormalizedCounts) {
  CountTable t(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  t.add(2, 10, 30);
  t.add(2, 11, 50);
  t.add(2, kLaneChangeLeft, 20);
  const auto m = smooth_and_normalize(t, 1);
  const auto& p = m.at(2).pmf;
  EXPECT_DOUBLE_EQ(p[10], 0.3);
  EXPECT_DOUBLE_EQ(p[11], 0.5);
  EXPECT_DOUBLE_EQ(p[kLaneChangeLeft], 0.2);
  EXPECT_EQ(m.at(2).coverage, 100u);
}

TEST(Smooth, SpikeSpreadsOverWindow) {
  ActionPmf p{};
  p[21] = 1.0;
  const auto q = smooth_accels(p, 3);
  for (int k : {20, 21, 22}) EXPECT_NEAR(q[static_cast<std::size_t>(k)], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(q[19], 0.0);
  EXPECT_EQ(q[23], 0.0);
}

TEST(Smooth, EdgeWindowsTruncateAndKeepMass) {
  ActionPmf p{};
  p[kFirstAccel] = 0.4;
  p[kLastAccel] = 0.3;
  p[kLaneChangeRight] = 0.3;
  const auto q = smooth_accels(p, 5);
  EXPECT_NEAR(q[1], 0.4 / 3.0, 1e-15);
  EXPECT_NEAR(q[3], 0.4 / 3.0, 1e-15);
  EXPECT_EQ(q[4], 0.0);
  EXPECT_NEAR(longitudinal_mass(q), longitudinal_mass(p), 1e-12);
  EXPECT_EQ(q[kLaneChangeRight], 0.3);
  EXPECT_THROW(smooth_accels(p, 4), std::invalid_argument);
  EXPECT_THROW(smooth_accels(p, 0), std::invalid_argument);
}

TEST(Smooth, CoveredRowsArePmfsAndThinRowsAreDropped) {
  CountTable t(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  std::mt19937_64 rng(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto n = s * 7;
    for (std::uint64_t i = 0; i < n; ++i) t.add(s, static_cast<int>(rng() % kNumActions));
  }
  const auto m = smooth_and_normalize(t, SmoothingConfig{5, 50});
  EXPECT_NO_THROW(m.validate());
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(m.covered(s), s * 7 >= 50) << s;
  const auto kept = smooth_and_normalize(t, SmoothingConfig{5, 50}, true);
  EXPECT_EQ(kept.at(3).status, RowStatus::Uncovered);
  const auto cov = coverage_summary(t, 50);
  EXPECT_EQ(cov.observed_states, 19u);
  EXPECT_EQ(cov.covered_states, 12u);
}

TEST(Smooth, EmpiricalRowConvergesAtTenThousandSamples) {
  // Truth: a discretised bell over the accelerations plus some lane-change mass.
  std::vector<double> truth(kNumActions, 0.0);
  double s = 0.0;
  for (int k = kFirstAccel; k <= kLastAccel; ++k) {
    const double a = accel_value(k);
    truth[static_cast<std::size_t>(k)] = std::exp(-0.5 * a * a / 0.64);
    s += truth[static_cast<std::size_t>(k)];
  }
  for (auto& x : truth) x *= 0.98 / s;
  truth[kLaneChangeLeft] = 0.01;
  truth[kLaneChangeRight] = 0.01;
  int good = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    std::discrete_distribution<int> d(truth.begin(), truth.end());
    CountTable t(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
    for (int i = 0; i < 10000; ++i) t.add(0, d(rng));
    const auto m = smooth_and_normalize(t, 1);
    good += metrics::hellinger(as_vector(m.at(0).pmf), truth) <= 0.05 ? 1 : 0;
  }
  EXPECT_GE(good, static_cast<int>(0.99 * trials));
}

TEST(Targets, LaplaceSmoothingAndCrashMask) {
  const std::vector<std::uint64_t> c{0, 2, 1};
  const auto p = laplace_normalize(c);
  EXPECT_DOUBLE_EQ(p[0], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(p[1], 3.0 / 6.0);
  const std::vector<bool> mask{true, false, false};
  const auto q = laplace_normalize(c, &mask);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_DOUBLE_EQ(q[1], 0.6);
  Targets t;
  const auto cf = car_following_target(t);
  const auto m = crash_mask(make_grid(Situation::CarFollowing, t.grid));
  double sum = 0.0;
  for (std::size_t i = 0; i < cf.size(); ++i) {
    sum += cf[i];
    if (m[i]) {
      EXPECT_EQ(cf[i], 0.0);
    }
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

namespace {

ModelSet small_set() {
  ModelSet set;
  const GridConfig g;
  for (auto s : kAllSituations) set.models.emplace(s, BehaviorModel(s, make_grid(s, g)));
  ActionPmf p{};
  p[kZeroAccel] = 1.0 / 3.0;
  p[kZeroAccel + 1] = 2.0 / 3.0;
  set.get(Situation::FreeDriving).set_row(7, p, 120, RowStatus::Covered);
  set.get(Situation::FreeDriving).set_row(8, p, 0, RowStatus::Filled);
  set.get(Situation::CarFollowing).set_row(2, ActionPmf{}, 9, RowStatus::CrashExcluded);
  ActionPmf lc{};
  lc[kLaneChangeLeft] = 0.015625;
  lc[kZeroAccel] = 1.0 - 0.015625;
  set.get(Situation::LcTwoAdjacent).set_row(123456789, lc, 64, RowStatus::Covered);
  return set;
}

}  // namespace

TEST(Serialize, ModelSetRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "nde_models_rt";
  std::filesystem::remove_all(dir);
  const auto set = small_set();
  write_model_set(dir, set, {{"seed", 4}});
  const auto back = read_model_set(dir);
  for (auto s : kAllSituations) {
    const auto& a = set.get(s);
    const auto& b = back.get(s);
    EXPECT_EQ(a.grid(), b.grid());
    EXPECT_EQ(a.states(), b.states());
    for (auto st : a.states()) {
      EXPECT_EQ(a.at(st).pmf, b.at(st).pmf);
      EXPECT_EQ(a.at(st).coverage, b.at(st).coverage);
      EXPECT_EQ(a.at(st).status, b.at(st).status);
    }
  }
  const auto loaded = read_model(dir / model_file_name(Situation::FreeDriving));
  EXPECT_EQ(loaded.provenance.at("seed"), 4);
  std::filesystem::remove_all(dir);
}

TEST(Serialize, OutputIsDeterministic) {
  const auto set = small_set();
  EXPECT_EQ(model_to_string(set.get(Situation::FreeDriving), {}),
            model_to_string(set.get(Situation::FreeDriving), {}));
}

TEST(Serialize, RejectsWrongVersion) {
  const auto dir = std::filesystem::temp_directory_path() / "nde_models_bad";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.csv";
  auto body = model_to_string(small_set().get(Situation::FreeDriving), {});
  const auto pos = body.find(": 1\n");
  ASSERT_NE(pos, std::string::npos);
  body.replace(pos, 4, ": 9\n");
  {
    std::ofstream out(path);
    out << body;
  }
  EXPECT_THROW(read_model(path), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(Serialize, TargetsRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "nde_targets_rt.csv";
  Targets t;
  t.free_speed[3] = 5;
  t.cf_joint[4000] = 17;
  t.speed_all[99] = 2;
  write_targets(path, t);
  const auto b = read_targets(path);
  EXPECT_EQ(b.free_speed, t.free_speed);
  EXPECT_EQ(b.cf_joint, t.cf_joint);
  EXPECT_EQ(b.speed_all, t.speed_all);
  std::filesystem::remove(path);
}

TEST(Builder, BatchesMatchSinglePass) {
  std::vector<ndd::TrajectoryRecord> rs;
  for (std::int64_t id = 0; id < 4; ++id) {
    for (int i = 0; i < 80; ++i) {
      ndd::TrajectoryRecord r;
      r.vehicle_id = id;
      r.time = i / 10.0;
      r.v = 25.0 + static_cast<double>(id) + 0.01 * i;
      r.x = 30.0 * r.time;
      r.accel = 0.1;
      r.lead_id = id % 2 == 0 ? 100 + id : -1;
      r.range = 40.0;
      rs.push_back(r);
    }
  }
  ModelBuilder one;
  one.add_records(rs);
  ModelBuilder two;
  two.add_records(std::span(rs).first(160));
  two.add_records(std::span(rs).subspan(160));
  const auto a = one.finish(SmoothingConfig{5, 10});
  const auto b = two.finish(SmoothingConfig{5, 10});
  EXPECT_EQ(a.stats.samples, b.stats.samples);
  EXPECT_EQ(a.stats.segments, 4u);
  for (auto s : kAllSituations) {
    EXPECT_EQ(model_to_string(a.models.get(s), {}), model_to_string(b.models.get(s), {}));
  }
  EXPECT_EQ(a.targets.speed_all, b.targets.speed_all);
  ASSERT_EQ(a.coverage.size(), 6u);
  EXPECT_EQ(a.coverage[0].samples + a.coverage[1].samples, 320u);
}
