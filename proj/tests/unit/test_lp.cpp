#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "nde/lp/lp_format.hpp"
#include "nde/lp/simplex.hpp"

#include "support/oracles.hpp"

using namespace nde::lp;
using namespace nde::oracle;

TEST(Simplex, TrivialMinimum) {
  Eigen::MatrixXd a(1, 2);
  a << 1, 1;
  const auto s = solve(make(a, Eigen::VectorXd::Ones(1), Eigen::Vector2d(1, 0)));
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 0.0, 1e-12);
  EXPECT_NEAR(s.x(1), 1.0, 1e-12);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(Simplex, SlackForm) {
  Eigen::MatrixXd a(1, 2);
  a << 1, 1;
  const auto s = solve(make(a, Eigen::VectorXd::Ones(1), Eigen::Vector2d(-1, 0)));
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_NEAR(s.objective, -1.0, 1e-12);
}

TEST(Simplex, DetectsUnbounded) {
  Eigen::MatrixXd a(1, 2);
  a << 1, -1;
  const auto s = solve(make(a, Eigen::VectorXd::Ones(1), Eigen::Vector2d(-1, 0)));
  EXPECT_EQ(s.status, Status::Unbounded);
}

TEST(Simplex, DetectsInfeasible) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 1, 1;
  const auto s = solve(make(a, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1)));
  EXPECT_EQ(s.status, Status::Infeasible);
}

TEST(Simplex, RedundantRowsAreHandled) {
  Eigen::MatrixXd a(3, 3);
  a << 1, 1, 1, 2, 2, 2, 1, 0, -1;
  const auto s = solve(make(a, Eigen::Vector3d(1, 2, 0), Eigen::Vector3d(0, 1, 2)));
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 0.5, 1e-9);
  EXPECT_NEAR(s.x(2), 0.5, 1e-9);
  EXPECT_NEAR(s.objective, 1.0, 1e-9);
}

TEST(Simplex, UpperBoundsMatchSlackFormulation) {
  // Bounded: x <= u directly. Reference: the same LP with explicit slack columns.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4;
    Eigen::MatrixXd a(1, n);
    for (int j = 0; j < n; ++j) a(0, j) = 0.5 + u(rng);
    const double cap = 0.4 + u(rng);
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c(j) = u(rng) - 0.5;
    Eigen::VectorXd b(1);
    b(0) = 1.0;
    auto bounded = make(a, b, c);
    bounded.upper.assign(n, cap);
    Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(1 + n, 2 * n);
    a2.block(0, 0, 1, n) = a;
    for (int j = 0; j < n; ++j) {
      a2(1 + j, j) = 1.0;
      a2(1 + j, n + j) = 1.0;
    }
    Eigen::VectorXd b2(1 + n);
    b2(0) = 1.0;
    b2.tail(n).setConstant(cap);
    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(2 * n);
    c2.head(n) = c;
    const auto ref = vertex_enumeration(make(a2, b2, c2));
    const auto s = solve(bounded);
    ASSERT_TRUE(ref.has_value());
    ASSERT_EQ(s.status, Status::Optimal);
    EXPECT_NEAR(s.objective, *ref, 1e-7);
    EXPECT_LE(s.x.maxCoeff(), cap + 1e-12);
  }
}

TEST(Simplex, MatchesVertexEnumeration) {
  std::mt19937_64 rng(2024);
  int compared = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto lp = random_lp(rng, trial % 3 != 0);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lp.A);
    if (lu.rank() < lp.rows()) continue;
    const auto ref = vertex_enumeration(lp);
    const auto s = solve(lp);
    if (!ref) {
      EXPECT_EQ(s.status, Status::Infeasible) << trial;
      ++infeasible;
      continue;
    }
    ASSERT_EQ(s.status, Status::Optimal) << trial;
    EXPECT_NEAR(s.objective, *ref, 1e-7) << trial;
    const double bnorm = lp.b.cwiseAbs().maxCoeff();
    EXPECT_LE(max_constraint_violation(lp, s.x), 1e-7 * (1.0 + bnorm));
    EXPECT_GE(s.x.minCoeff(), -1e-9);
    ++compared;
  }
  EXPECT_GE(compared, 100);
  EXPECT_GE(infeasible, 10);
}

TEST(Simplex, WeakAndStrongDuality) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto lp = random_lp(rng, true);
    const auto s = solve(lp);
    ASSERT_EQ(s.status, Status::Optimal);
    // Reduced costs c - A^T y >= 0 make y dual feasible.
    const Eigen::VectorXd reduced = lp.c - lp.A.transpose() * s.y;
    EXPECT_GE(reduced.minCoeff(), -1e-7);
    EXPECT_LE(lp.b.dot(s.y), s.objective + 1e-7);
    EXPECT_NEAR(lp.b.dot(s.y), s.objective, 1e-7);
    // A hand-built dual point: scale the bounding row until it is dual feasible.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(lp.rows());
    const Eigen::Index last = lp.rows() - 1;
    double t = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < lp.cols(); ++j) t = std::min(t, lp.c(j) / lp.A(last, j));
    y(last) = t;
    EXPECT_LE(lp.b.dot(y), s.objective + 1e-7);
  }
}

TEST(Simplex, DeterministicBitPattern) {
  std::mt19937_64 rng(5);
  const auto lp = random_lp(rng, true);
  const auto a = solve(lp);
  const auto b = solve(lp);
  ASSERT_EQ(a.x.size(), b.x.size());
  EXPECT_EQ(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * static_cast<std::size_t>(a.x.size())), 0);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Simplex, DimensionMismatchThrows) {
  Eigen::MatrixXd a(2, 3);
  a.setOnes();
  EXPECT_THROW(solve(make(a, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3))), std::invalid_argument);
  EXPECT_THROW(solve(make(a, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2))), std::invalid_argument);
  auto lp = make(a, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3));
  lp.b(0) = std::nan("");
  EXPECT_THROW(solve(lp), std::invalid_argument);
}

TEST(Simplex, IterationLimitIsReported) {
  std::mt19937_64 rng(8);
  LinearProgram lp;
  do {
    lp = random_lp(rng, true);
  } while (lp.rows() < 3);
  SolverOptions o;
  o.max_iters = 1;
  EXPECT_EQ(solve(lp, o).status, Status::IterLimit);
}

TEST(LpFormat, WritesAllSections) {
  Eigen::MatrixXd a(1, 2);
  a << 1, -2;
  auto lp = make(a, Eigen::VectorXd::Ones(1), Eigen::Vector2d(0.5, 0));
  lp.upper = {kInf, 3.0};
  const auto text = to_lp_format(lp, "toy");
  EXPECT_NE(text.find("Minimize\n obj: + 0.5 x0"), std::string::npos);
  EXPECT_NE(text.find(" c0: + 1 x0 - 2 x1 = 1\n"), std::string::npos);
  EXPECT_NE(text.find(" x0 >= 0\n"), std::string::npos);
  EXPECT_NE(text.find(" 0 <= x1 <= 3\n"), std::string::npos);
  EXPECT_NE(text.find("End\n"), std::string::npos);
}
