#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nde::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c^T x  subject to  A x = b,  0 <= x <= upper.
/// `upper` may be left empty (no upper bounds) or hold +inf entries.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<double> upper;
  std::vector<std::string> var_names;
  std::vector<std::string> row_names;

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }

  double upper_bound(Eigen::Index j) const {
    return upper.empty() ? kInf : upper[static_cast<std::size_t>(j)];
  }

  void validate() const {
    if (b.size() != A.rows()) {
      throw std::invalid_argument("b has " + std::to_string(b.size()) + " entries, A has " +
                                  std::to_string(A.rows()) + " rows");
    }
    if (c.size() != A.cols()) {
      throw std::invalid_argument("c has " + std::to_string(c.size()) + " entries, A has " +
                                  std::to_string(A.cols()) + " columns");
    }
    if (!upper.empty() && upper.size() != static_cast<std::size_t>(A.cols())) {
      throw std::invalid_argument("upper bounds do not match the column count");
    }
    if (!var_names.empty() && var_names.size() != static_cast<std::size_t>(A.cols())) {
      throw std::invalid_argument("variable names do not match the column count");
    }
    if (!row_names.empty() && row_names.size() != static_cast<std::size_t>(A.rows())) {
      throw std::invalid_argument("row names do not match the row count");
    }
    if (!A.allFinite() || !b.allFinite() || !c.allFinite()) {
      throw std::invalid_argument("LP data must be finite");
    }
    for (double u : upper) {
      if (std::isnan(u) || u < 0.0) throw std::invalid_argument("upper bounds must be >= 0");
    }
  }
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterLimit: return "iteration_limit";
  }
  return "?";
}

struct LpSolution {
  Status status = Status::IterLimit;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // row duals at the final basis
  double objective = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t phase1_iterations = 0;
  double infeasibility = 0.0;  // phase-one objective at termination
};

struct SolverOptions {
  std::uint64_t max_iters = 200000;
  double tol = 1e-9;               // pivot, optimality and feasibility tolerance
  std::uint64_t refactor_every = 50;
  std::uint64_t degenerate_switch = 50;  // consecutive degenerate pivots before Bland's rule
};

namespace detail {

struct SparseColumn {
  std::vector<std::pair<Eigen::Index, double>> entries;
};

/// Revised simplex on bounded variables with an explicit basis inverse kept
/// up to date by product-form updates and refactorised periodically.
/// Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
/// to Bland's smallest-index rule until the objective moves again.
class Simplex {
 public:
  Simplex(std::vector<SparseColumn> cols, Eigen::VectorXd b, std::vector<double> upper,
          const SolverOptions& opt)
      : cols_(std::move(cols)), b_(std::move(b)), ub_(std::move(upper)), opt_(opt) {
    m_ = b_.size();
    n_ = static_cast<Eigen::Index>(cols_.size());
    at_upper_.assign(static_cast<std::size_t>(n_), false);
    x_ = Eigen::VectorXd::Zero(n_);
    basic_pos_.assign(static_cast<std::size_t>(n_), -1);
  }

  // Basis must be given as column indices, one per row.
  void set_basis(const std::vector<Eigen::Index>& basis) {
    basis_ = basis;
    std::fill(basic_pos_.begin(), basic_pos_.end(), -1);
    for (std::size_t r = 0; r < basis_.size(); ++r) {
      basic_pos_[static_cast<std::size_t>(basis_[r])] = static_cast<Eigen::Index>(r);
    }
    refactor();
  }

  void set_upper(Eigen::Index j, double u) { ub_[static_cast<std::size_t>(j)] = u; }
  void set_cost(Eigen::VectorXd c) { c_ = std::move(c); }

  const Eigen::VectorXd& x() const { return x_; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  bool is_basic(Eigen::Index j) const { return basic_pos_[static_cast<std::size_t>(j)] >= 0; }
  std::uint64_t iterations() const { return iters_; }

  Eigen::VectorXd duals() const {
    Eigen::VectorXd cb(m_);
    for (Eigen::Index r = 0; r < m_; ++r) cb(r) = c_(basis_[static_cast<std::size_t>(r)]);
    return binv_.transpose() * cb;
  }

  double objective() const { return c_.dot(x_); }

  Eigen::VectorXd column_image(Eigen::Index j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    for (const auto& [i, v] : cols_[static_cast<std::size_t>(j)].entries) a += v * binv_.col(i);
    return a;
  }

  // Entry (r, j) of B^-1 A.
  double tableau_entry(Eigen::Index r, Eigen::Index j) const {
    double a = 0.0;
    for (const auto& [i, v] : cols_[static_cast<std::size_t>(j)].entries) a += v * binv_(r, i);
    return a;
  }

  // Pivot column j into the basis at row r without a ratio test. Used to
  // swap out zero-level artificial variables.
  void force_pivot(Eigen::Index j, Eigen::Index r) {
    const Eigen::VectorXd alpha = column_image(j);
    const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
    pivot(j, r, alpha);
    basic_pos_[static_cast<std::size_t>(leaving)] = -1;
    at_upper_[static_cast<std::size_t>(leaving)] = false;
    x_(leaving) = 0.0;
    recompute_basic();
  }

  /// Runs until optimal, unbounded or out of iterations.
  Status run(std::uint64_t budget) {
    std::uint64_t degenerate_run = 0;
    const double tol = opt_.tol;
    for (std::uint64_t k = 0; k < budget; ++k) {
      const Eigen::VectorXd y = duals();
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      Eigen::Index enter = -1;
      double best = 0.0;
      int dir = 0;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (is_basic(j)) continue;
        const double u = ub_[static_cast<std::size_t>(j)];
        if (u <= 0.0) continue;  // fixed at zero
        double d = c_(j);
        for (const auto& [i, v] : cols_[static_cast<std::size_t>(j)].entries) d -= y(i) * v;
        const bool up = at_upper_[static_cast<std::size_t>(j)];
        int s = 0;
        if (!up && d < -tol) s = +1;
        if (up && d > tol) s = -1;
        if (s == 0) continue;
        if (bland) {
          enter = j;
          dir = s;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = s;
        }
      }
      if (enter < 0) return Status::Optimal;

      const Eigen::VectorXd alpha = column_image(enter);
      // x_B(t) = x_B - dir * t * alpha
      double t = ub_[static_cast<std::size_t>(enter)];
      Eigen::Index leave_row = -1;
      bool leave_to_upper = false;
      for (Eigen::Index r = 0; r < m_; ++r) {
        const double g = dir * alpha(r);
        const Eigen::Index bv = basis_[static_cast<std::size_t>(r)];
        double lim = kInf;
        bool to_upper = false;
        if (g > tol) {
          lim = std::max(0.0, x_(bv)) / g;
        } else if (g < -tol) {
          const double u = ub_[static_cast<std::size_t>(bv)];
          if (u == kInf) continue;
          lim = std::max(0.0, u - x_(bv)) / -g;
          to_upper = true;
        } else {
          continue;
        }
        // Ties go to the smallest basic index (Bland); a tie with the
        // entering variable's own bound prefers the basis change.
        const bool tie = std::abs(lim - t) <= 1e-12 &&
                         (leave_row < 0 || bv < basis_[static_cast<std::size_t>(leave_row)]);
        if (lim < t - 1e-12 || tie) {
          t = lim;
          leave_row = r;
          leave_to_upper = to_upper;
        }
      }
      if (t == kInf) return Status::Unbounded;
      ++iters_;
      degenerate_run = t <= tol ? degenerate_run + 1 : 0;

      x_(enter) += dir * t;
      for (Eigen::Index r = 0; r < m_; ++r) {
        x_(basis_[static_cast<std::size_t>(r)]) -= dir * t * alpha(r);
      }
      if (leave_row < 0) {
        // Bound flip: the entering variable reached its other bound first.
        at_upper_[static_cast<std::size_t>(enter)] = dir > 0;
        x_(enter) = dir > 0 ? ub_[static_cast<std::size_t>(enter)] : 0.0;
        continue;
      }
      const Eigen::Index leaving = basis_[static_cast<std::size_t>(leave_row)];
      pivot(enter, leave_row, alpha);
      basic_pos_[static_cast<std::size_t>(leaving)] = -1;
      at_upper_[static_cast<std::size_t>(leaving)] = leave_to_upper;
      x_(leaving) = leave_to_upper ? ub_[static_cast<std::size_t>(leaving)] : 0.0;
      at_upper_[static_cast<std::size_t>(enter)] = false;
      if (++since_refactor_ >= opt_.refactor_every) {
        refactor();
      }
    }
    return Status::IterLimit;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (Eigen::Index r = 0; r < m_; ++r) {
      for (const auto& [i, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])].entries) {
        B(i, r) = v;
      }
    }
    binv_ = B.partialPivLu().inverse();
    since_refactor_ = 0;
    recompute_basic();
  }

 private:
  void pivot(Eigen::Index enter, Eigen::Index r, const Eigen::VectorXd& alpha) {
    const double piv = alpha(r);
    const Eigen::RowVectorXd pr = binv_.row(r) / piv;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == r || alpha(i) == 0.0) continue;
      binv_.row(i) -= alpha(i) * pr;
    }
    binv_.row(r) = pr;
    basis_[static_cast<std::size_t>(r)] = enter;
    basic_pos_[static_cast<std::size_t>(enter)] = r;
  }

  void recompute_basic() {
    Eigen::VectorXd rhs = b_;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (is_basic(j)) continue;
      if (at_upper_[static_cast<std::size_t>(j)]) {
        x_(j) = ub_[static_cast<std::size_t>(j)];
        for (const auto& [i, v] : cols_[static_cast<std::size_t>(j)].entries) rhs(i) -= v * x_(j);
      } else {
        x_(j) = 0.0;
      }
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (Eigen::Index r = 0; r < m_; ++r) x_(basis_[static_cast<std::size_t>(r)]) = xb(r);
  }

  std::vector<SparseColumn> cols_;
  Eigen::VectorXd b_;
  std::vector<double> ub_;
  SolverOptions opt_;
  Eigen::Index m_ = 0;
  Eigen::Index n_ = 0;
  Eigen::VectorXd c_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd binv_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> basic_pos_;
  std::vector<bool> at_upper_;
  std::uint64_t iters_ = 0;
  std::uint64_t since_refactor_ = 0;
};

}  // namespace detail

/// Two-phase bounded revised simplex. Phase one starts from an all-artificial
/// basis; artificials left basic at zero (redundant rows) are pinned to zero
/// for phase two.
inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  lp.validate();
  const Eigen::Index m = lp.rows();
  const Eigen::Index n = lp.cols();
  LpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd b = lp.b;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      sign(i) = -1.0;
      b(i) = -b(i);
    }
  }
  std::vector<detail::SparseColumn> cols(static_cast<std::size_t>(n + m));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = lp.A(i, j);
      if (v != 0.0) cols[static_cast<std::size_t>(j)].entries.emplace_back(i, sign(i) * v);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) cols[static_cast<std::size_t>(n + i)].entries.emplace_back(i, 1.0);
  std::vector<double> ub(static_cast<std::size_t>(n + m), kInf);
  for (Eigen::Index j = 0; j < n; ++j) ub[static_cast<std::size_t>(j)] = lp.upper_bound(j);

  detail::Simplex sx(std::move(cols), b, ub, opt);
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
  c1.tail(m).setOnes();
  sx.set_cost(c1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  sx.set_basis(basis);

  auto st = sx.run(opt.max_iters);
  sol.phase1_iterations = sx.iterations();
  sx.refactor();
  sol.infeasibility = sx.x().tail(m).sum();
  if (st == Status::IterLimit) {
    sol.status = Status::IterLimit;
    sol.iterations = sx.iterations();
    sol.x = sx.x().head(n);
    return sol;
  }
  const double bnorm = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
  if (sol.infeasibility > 1e-7 * (1.0 + bnorm)) {
    sol.status = Status::Infeasible;
    sol.iterations = sx.iterations();
    sol.x = sx.x().head(n);
    return sol;
  }

  // Swap zero-level artificials out of the basis where a structural column
  // can take their place; the rest sit on redundant rows.
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index bv = sx.basis()[static_cast<std::size_t>(r)];
    if (bv < n) continue;
    Eigen::Index pick = -1;
    double best = 1e-7;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sx.is_basic(j) || ub[static_cast<std::size_t>(j)] <= 0.0) continue;
      const double a = std::abs(sx.tableau_entry(r, j));
      if (a > best) {
        best = a;
        pick = j;
      }
    }
    if (pick >= 0) sx.force_pivot(pick, r);
  }
  for (Eigen::Index i = 0; i < m; ++i) sx.set_upper(n + i, 0.0);

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n + m);
  c2.head(n) = lp.c;
  sx.set_cost(c2);
  st = sx.run(opt.max_iters > sx.iterations() ? opt.max_iters - sx.iterations() : 0);
  sx.refactor();
  sol.status = st;
  sol.iterations = sx.iterations();
  sol.x = sx.x().head(n).cwiseMax(0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    sol.x(j) = std::min(sol.x(j), ub[static_cast<std::size_t>(j)]);
  }
  sol.objective = lp.c.dot(sol.x);
  sol.y = sx.duals().cwiseProduct(sign);
  return sol;
}

inline double max_constraint_violation(const LinearProgram& lp, const Eigen::VectorXd& x) {
  if (lp.rows() == 0) return 0.0;
  return (lp.A * x - lp.b).cwiseAbs().maxCoeff();
}

}  // namespace nde::lp
