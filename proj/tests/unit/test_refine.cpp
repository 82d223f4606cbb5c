#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "nde/markov/assemble.hpp"
#include "nde/markov/stationary.hpp"
#include "nde/refine/refine.hpp"

#include "support/oracles.hpp"

using namespace nde;
using namespace nde::refine;
using namespace nde::oracle;

namespace {

RefinementProblem problem(BehaviorModel f, std::vector<double> pi) {
  RefinementProblem pr;
  pr.f_star = std::move(f);
  pr.pi_star = std::move(pi);
  return pr;
}

void expect_valid_rows(const BehaviorModel& m) {
  for (auto s : m.states()) {
    const auto& p = m.at(s).pmf;
    if (m.at(s).status == RowStatus::CrashExcluded) continue;
    for (double x : p) EXPECT_GE(x, 0.0);
    EXPECT_NEAR(row_sum(p), 1.0, 1e-9);
  }
}
}  // namespace

TEST(RefineFreeDriving, ConsistentTargetNeedsNoChange) {
  const auto f = three_state_model();
  const auto pi = markov::stationary(markov::assemble_free_driving(f), 1e-15).pi;
  const auto r = refine_free_driving(problem(f, pi));
  EXPECT_NEAR(r.report.objective, 0.0, 1e-9);
  EXPECT_LE(r.report.stationarity_residual, 1e-9);
  for (std::uint64_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < kNumActions; ++k) EXPECT_NEAR(r.model.at(s).pmf[k], f.at(s).pmf[k], 1e-9);
  }
}

TEST(RefineFreeDriving, ThreeStateToyMatchesGridSearch) {
  const auto f = three_state_model();
  const std::array<double, 3> pi{0.2, 0.5, 0.3};
  const double oracle = grid_search_l1(transition_rows(f), pi);
  const auto r = refine_free_driving(problem(f, {pi.begin(), pi.end()}));
  EXPECT_EQ(r.report.solver_status, "optimal");
  EXPECT_NEAR(r.report.objective, oracle, 1e-4);
  EXPECT_LE(r.report.stationarity_residual, 1e-6);
  EXPECT_GT(r.report.empirical_residual, 0.01);
  ASSERT_TRUE(r.report.stationary_l1.has_value());
  EXPECT_LE(*r.report.stationary_l1, 1e-6);
  expect_valid_rows(r.model);
}

TEST(RefineFreeDriving, LaneChangeEntriesAreCarriedOver) {
  auto f = three_state_model();
  ActionPmf p = f.at(1).pmf;
  p[kZeroAccel] -= 0.1;
  p[kLaneChangeLeft] = 0.06;
  p[kLaneChangeRight] = 0.04;
  f.set_row(1, p, 500, RowStatus::Covered);
  const auto r = refine_free_driving(problem(f, {0.2, 0.5, 0.3}));
  EXPECT_EQ(r.model.at(1).pmf[kLaneChangeLeft], 0.06);
  EXPECT_EQ(r.model.at(1).pmf[kLaneChangeRight], 0.04);
  EXPECT_LE(r.report.stationarity_residual, 1e-6);
  expect_valid_rows(r.model);
}

TEST(RefineFreeDriving, FrobeniusModeStaysFeasibleAndNoWorseThanL1Point) {
  const auto f = three_state_model();
  const std::vector<double> pi{0.2, 0.5, 0.3};
  const auto l1 = refine_free_driving(problem(f, pi));
  auto pr = problem(f, pi);
  pr.objective = Objective::SquaredFrobenius;
  const auto fr = refine_free_driving(pr);
  EXPECT_LE(fr.report.stationarity_residual, 1e-6);
  double l1_sq = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < kNumActions; ++k) {
      const double d = l1.model.at(s).pmf[k] - f.at(s).pmf[k];
      l1_sq += d * d;
    }
  }
  EXPECT_LE(fr.report.objective, l1_sq + 1e-9);
  expect_valid_rows(fr.model);
}

TEST(RefineFreeDriving, SoftResidualShrinksWithLambda) {
  const auto f = three_state_model();
  double last = std::numeric_limits<double>::infinity();
  for (double lambda : {1.0, 10.0, 100.0}) {
    auto pr = problem(f, {0.2, 0.5, 0.3});
    pr.constraint = ConstraintMode::Soft;
    pr.lambda = lambda;
    const auto r = refine_free_driving(pr);
    EXPECT_LE(r.report.stationarity_residual, last + 1e-12) << lambda;
    last = r.report.stationarity_residual;
    expect_valid_rows(r.model);
  }
  EXPECT_LE(last, 1e-6);
  auto bad = problem(f, {0.2, 0.5, 0.3});
  bad.constraint = ConstraintMode::Soft;
  bad.lambda = 0.0;
  EXPECT_THROW(refine_free_driving(bad), std::invalid_argument);
}

TEST(RefineFreeDriving, RejectsBadInputs) {
  const auto f = three_state_model();
  EXPECT_THROW(refine_free_driving(problem(f, {0.5, 0.5})), std::invalid_argument);
  EXPECT_THROW(refine_free_driving(problem(f, {0.5, 0.5, 0.5})), std::invalid_argument);
  auto g = f;
  g.set_row(2, ActionPmf{}, 0, RowStatus::Uncovered);
  EXPECT_THROW(refine_free_driving(problem(g, {0.2, 0.5, 0.3})), markov::UncoveredRowsError);
  auto pr = problem(f, {0.2, 0.5, 0.3});
  pr.max_lp_cells = 10.0;
  EXPECT_THROW(refine_free_driving(pr), std::invalid_argument);
}

TEST(RefineCarFollowing, ToyMatchesFrozenHighsOptimum) {
  // Optimum of the same toy from tests/oracles/refine_toy_oracle.py.
  const double kOracle = kCarFollowingToyOptimum;
  const auto g = cf_toy_grid(-3.0, 3.0, 2.0);
  const auto f = cf_model(g, {{kZeroAccel, 0.5}, {kZeroAccel - 5, 0.25}, {kZeroAccel + 5, 0.25}});
  const auto alt = cf_model(g, {{kZeroAccel, 0.4}, {kZeroAccel - 5, 0.35}, {kZeroAccel + 5, 0.25}});
  const auto pi = markov::stationary(markov::assemble_car_following(alt), 1e-15).pi;
  const auto r = refine_car_following(problem(f, pi));
  EXPECT_EQ(r.report.solver_status, "optimal");
  EXPECT_NEAR(r.report.objective, kOracle, 1e-4);
  EXPECT_LE(r.report.stationarity_residual, 1e-6);
  expect_valid_rows(r.model);
}

TEST(RefineCarFollowing, ConsistentTargetNeedsNoChange) {
  const auto g = cf_toy_grid(-3.0, 3.0, 2.0);
  const auto f = cf_model(g, {{kZeroAccel, 0.5}, {kZeroAccel - 5, 0.25}, {kZeroAccel + 5, 0.25}});
  const auto pi = markov::stationary(markov::assemble_car_following(f), 1e-15).pi;
  const auto r = refine_car_following(problem(f, pi));
  EXPECT_NEAR(r.report.objective, 0.0, 1e-9);
}

TEST(RefineCarFollowing, CrashLeakMakesHardModeInfeasible) {
  // Range 6 m closing at 6 m/s always feeds the crash bin at range 2 m.
  const auto g = cf_toy_grid(-9.0, 9.0, 6.0);
  const auto f = cf_model(g, {{kZeroAccel, 0.5}, {kZeroAccel - 5, 0.25}, {kZeroAccel + 5, 0.25}});
  const markov::CarFollowingKernel k(g, 1.0);
  std::vector<double> pi(g.size(), 0.0);
  std::size_t live = 0;
  for (std::size_t s = 0; s < g.size(); ++s) live += k.absorbing(s) ? 0 : 1;
  ASSERT_EQ(live, g.size() - 2);
  for (std::size_t s = 0; s < g.size(); ++s) pi[s] = k.absorbing(s) ? 0.0 : 1.0 / static_cast<double>(live);
  EXPECT_THROW(refine_car_following(problem(f, pi)), InfeasibleRefinement);
  auto soft = problem(f, pi);
  soft.constraint = ConstraintMode::Soft;
  const auto r = refine_car_following(soft);
  EXPECT_GT(r.report.stationarity_residual, 0.0);
  EXPECT_LE(r.report.stationarity_residual, r.report.empirical_residual);
  EXPECT_EQ(r.model.at(0).status, RowStatus::CrashExcluded);
  expect_valid_rows(r.model);
}
