#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "nde/core/action_space.hpp"
#include "nde/core/behavior_model.hpp"
#include "nde/core/context.hpp"
#include "nde/core/histogram.hpp"
#include "nde/core/situation.hpp"
#include "nde/core/state_grid.hpp"

using namespace nde;

TEST(ActionSpace, IndexMapEndpoints) {
  EXPECT_DOUBLE_EQ(action_to_accel(1).accel, -4.0);
  EXPECT_DOUBLE_EQ(action_to_accel(31).accel, 2.0);
  EXPECT_NEAR(action_to_accel(21).accel, 0.0, 1e-12);
  EXPECT_EQ(action_to_accel(0).kind, ActionKind::LaneChangeLeft);
  EXPECT_EQ(action_to_accel(32).kind, ActionKind::LaneChangeRight);
  EXPECT_THROW(action_to_accel(-1), std::out_of_range);
  EXPECT_THROW(action_to_accel(33), std::out_of_range);
  EXPECT_EQ(kNumActions, 33);
}

TEST(ActionSpace, AccelerationsRoundTrip) {
  for (int k = kFirstAccel; k <= kLastAccel; ++k) {
    const double a = accel_value(k);
    EXPECT_EQ(accel_to_action(a), k);
    EXPECT_NEAR(action_to_accel(accel_to_action(a)).accel, a, 1e-12);
    EXPECT_NEAR(a, -4.0 + 0.2 * (k - 1), 1e-12);
  }
  EXPECT_EQ(accel_to_action(-9.0), kFirstAccel);
  EXPECT_EQ(accel_to_action(5.0), kLastAccel);
  EXPECT_EQ(accel_to_action(0.09), kZeroAccel);
  EXPECT_THROW(accel_to_action(std::nan("")), std::invalid_argument);
}

TEST(Axis, DiscretizeExamples) {
  const Axis v("v", 20.0, 40.0, 0.2);
  EXPECT_EQ(v.bins(), 100u);
  EXPECT_EQ(v.discretize(20.0), 0u);
  EXPECT_EQ(v.discretize(31.07), 55u);
  EXPECT_EQ(v.discretize(20.2), 1u);
  EXPECT_EQ(v.discretize(39.999), 99u);
  EXPECT_THROW(v.discretize(40.0), std::out_of_range);
  EXPECT_THROW(v.discretize(19.99), std::out_of_range);
  EXPECT_EQ(v.discretize_clamped(40.0), 99u);
  EXPECT_EQ(v.discretize_clamped(-3.0), 0u);
}

TEST(Axis, OutOfRangeMessageNamesAxis) {
  const Axis r("range", 0.0, 115.0, 1.0);
  try {
    r.discretize(120.0);
    FAIL() << "expected out_of_range";
  } catch (const std::out_of_range& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("range"), std::string::npos);
    EXPECT_NE(msg.find("115"), std::string::npos);
  }
}

TEST(Axis, BinCountIsCeiling) {
  EXPECT_EQ(Axis("a", 0.0, 115.0, 1.0).bins(), 115u);
  EXPECT_EQ(Axis("a", 0.0, 1.0, 0.3).bins(), 4u);
  EXPECT_EQ(Axis("a", -10.0, 10.0, 1.0).bins(), 20u);
  EXPECT_THROW(Axis("a", 1.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(Axis("a", 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Axis, CenterDiscretizesToOwnBin) {
  for (const Axis& a : {Axis("v", 20, 40, 0.2), Axis("v", 20, 40, 1.0), Axis("r", 0, 115, 1.0),
                        Axis("rr", -10, 10, 1.0)}) {
    for (std::size_t b = 0; b < a.bins(); ++b) EXPECT_EQ(a.discretize(a.center(b)), b);
  }
}

TEST(StateGrid, FlattenRoundTrip) {
  const StateGrid g = make_grid(Situation::CarFollowing, GridConfig{});
  EXPECT_EQ(g.size(), 20u * 115u * 20u);
  for (std::uint64_t s : {0ull, 1ull, 19ull, 20ull, 2299ull, 45999ull}) {
    const auto idx = g.unflatten(s);
    EXPECT_EQ(g.flatten(idx), s);
    EXPECT_EQ(g.encode(g.centers(s)), s);
  }
  const std::vector<std::size_t> idx{3, 7, 11};
  EXPECT_EQ(g.flatten(idx), (3u * 115u + 7u) * 20u + 11u);
  EXPECT_THROW(g.unflatten(g.size()), std::out_of_range);
  const std::vector<double> bad{25.0, 10.0};
  EXPECT_THROW(g.encode(bad), std::invalid_argument);
}

TEST(StateGrid, SituationGridSizes) {
  const GridConfig c;
  EXPECT_EQ(make_grid(Situation::FreeDriving, c).size(), 100u);
  EXPECT_EQ(make_grid(Situation::FreeLaneChange, c).size(), 2u * 20u * 20u * 115u);
  EXPECT_EQ(make_grid(Situation::CutIn, c).dims(), 6u);
  EXPECT_EQ(make_grid(Situation::LcOneAdjacent, c).dims(), 6u);
  EXPECT_EQ(make_grid(Situation::LcTwoAdjacent, c).dims(), 8u);
  EXPECT_EQ(make_grid(Situation::LcTwoAdjacent, c).kind(), GridKind::LaneChangeContext);
}

TEST(StateGrid, DiscreteStateIndicesWithinBounds) {
  const StateGrid g = make_grid(Situation::CarFollowing, GridConfig{});
  const auto d = DiscreteState::from_flat(g, 12345);
  ASSERT_EQ(d.indices.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(d.indices[i], g.axis(i).bins());
  EXPECT_EQ(DiscreteState::from_indices(g, d.indices).flat, 12345u);
}

TEST(Situation, NamesRoundTrip) {
  for (auto s : kAllSituations) EXPECT_EQ(situation_from_string(to_string(s)), s);
  EXPECT_THROW(situation_from_string("Merge"), std::invalid_argument);
  EXPECT_TRUE(is_longitudinal(Situation::CarFollowing));
  EXPECT_FALSE(is_longitudinal(Situation::CutIn));
}

TEST(BehaviorModel, RowsAndValidation) {
  BehaviorModel m(Situation::FreeDriving, make_grid(Situation::FreeDriving, GridConfig{}));
  EXPECT_EQ(m.num_states(), 100u);
  EXPECT_FALSE(m.covered(3));
  EXPECT_EQ(m.uncovered_states().size(), 100u);
  ActionPmf p{};
  p[kZeroAccel] = 0.75;
  p[kZeroAccel + 1] = 0.25;
  m.set_row(3, p, 80, RowStatus::Covered);
  EXPECT_TRUE(m.covered(3));
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.states(), std::vector<std::uint64_t>{3});
  p[kZeroAccel] = 0.5;
  m.set_row(4, p, 80, RowStatus::Covered);
  EXPECT_THROW(m.validate(), std::logic_error);
  m.set_row(4, p, 10, RowStatus::Uncovered);
  EXPECT_NO_THROW(m.validate());
  EXPECT_THROW(m.row(100), std::out_of_range);
  EXPECT_THROW(m.at(7), std::out_of_range);
}

TEST(BehaviorModel, FilledRowsAreUsable) {
  BehaviorRow r;
  r.status = RowStatus::Filled;
  EXPECT_TRUE(r.usable());
  r.status = RowStatus::CrashExcluded;
  EXPECT_FALSE(r.usable());
  for (auto s : {RowStatus::Covered, RowStatus::Uncovered, RowStatus::CrashExcluded, RowStatus::Filled}) {
    EXPECT_EQ(row_status_from_string(to_string(s)), s);
  }
}

TEST(Histogram, UniformBinsAndNormalization) {
  auto h = Histogram::uniform(20.0, 40.0, 0.2);
  EXPECT_EQ(h.bins(), 100u);
  EXPECT_EQ(h.edges.size(), h.counts.size() + 1);
  h.add(20.0);
  h.add(31.07);
  h.add(31.07);
  h.add(40.0);
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_EQ(h.counts[55], 2u);
  EXPECT_EQ(h.out_of_range, 1u);
  const auto p = h.normalized();
  double s = 0.0;
  for (double x : p) s += x;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_NEAR(p[55], 2.0 / 3.0, 1e-15);
  auto e = Histogram::uniform(0.0, 1.0, 0.5);
  for (double x : e.normalized()) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(h.merge(e), std::invalid_argument);
}

namespace {

DrivingContext following(double gap, double lead_v, double v = 30.0) {
  DrivingContext c;
  c.v = v;
  c.lead = {true, gap, lead_v, 7};
  c.left.lane_exists = true;
  c.right.lane_exists = true;
  return c;
}

}  // namespace

TEST(ContextEncoder, LongitudinalSituation) {
  const ContextEncoder enc;
  DrivingContext c;
  c.v = 31.07;
  EXPECT_EQ(enc.longitudinal_situation(c), Situation::FreeDriving);
  EXPECT_EQ(enc.longitudinal_state(c), 55u);
  c = following(120.0, 30.0);
  EXPECT_EQ(enc.longitudinal_situation(c), Situation::FreeDriving);
  c = following(40.5, 28.5);
  EXPECT_EQ(enc.longitudinal_situation(c), Situation::CarFollowing);
  // v bin 10, r bin 40, rr = -1.5 -> bin 8
  EXPECT_EQ(enc.longitudinal_state(c), (10u * 115u + 40u) * 20u + 8u);
}

TEST(ContextEncoder, LaneChangeContexts) {
  const ContextEncoder enc;
  auto c = following(30.0, 28.0);
  EXPECT_EQ(enc.lane_change_context(c, Direction::Left)->situation, Situation::FreeLaneChange);
  c.left.rear = {true, 20.0, 31.0, 3};
  EXPECT_EQ(enc.lane_change_context(c, Direction::Left)->situation, Situation::CutIn);
  c.left.lead = {true, 50.0, 33.0, 4};
  EXPECT_EQ(enc.lane_change_context(c, Direction::Left)->situation, Situation::LcTwoAdjacent);
  c.left.rear.present = false;
  EXPECT_EQ(enc.lane_change_context(c, Direction::Left)->situation, Situation::LcOneAdjacent);
  c.left.lead.gap = -1.0;
  EXPECT_FALSE(enc.lane_change_context(c, Direction::Left).has_value());
  c.right.lane_exists = false;
  EXPECT_FALSE(enc.lane_change_context(c, Direction::Right).has_value());
  DrivingContext free;
  free.v = 30.0;
  free.left.lane_exists = true;
  EXPECT_FALSE(enc.lane_change_context(free, Direction::Left).has_value());
}

TEST(ContextEncoder, DirectionIsLeadingAxis) {
  const ContextEncoder enc;
  const auto c = following(30.0, 28.0);
  const auto l = enc.lane_change_context(c, Direction::Left);
  const auto r = enc.lane_change_context(c, Direction::Right);
  const auto& g = enc.grid(Situation::FreeLaneChange);
  EXPECT_EQ(g.unflatten(l->state)[0], 0u);
  EXPECT_EQ(g.unflatten(r->state)[0], 1u);
  EXPECT_EQ(r->state - l->state, g.size() / 2);
}
