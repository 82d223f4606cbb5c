#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nde/core/behavior_model.hpp"
#include "nde/lp/simplex.hpp"
#include "nde/markov/assemble.hpp"
#include "nde/markov/stationary.hpp"
#include "nde/metrics/hellinger.hpp"

namespace nde::refine {

enum class Objective { L1, SquaredFrobenius };
enum class ConstraintMode { Hard, Soft };

inline const char* to_string(Objective o) { return o == Objective::L1 ? "l1" : "squared_frobenius"; }
inline const char* to_string(ConstraintMode c) { return c == ConstraintMode::Hard ? "hard" : "soft"; }

struct RefinementProblem {
  BehaviorModel f_star;
  std::vector<double> pi_star;
  Objective objective = Objective::L1;
  ConstraintMode constraint = ConstraintMode::Hard;
  double lambda = 100.0;  // weight of the stationarity residual in soft mode
  double dt_mc = 1.0;
  double max_brake = 4.0;             // car-following crash states
  double max_lp_cells = 6.0e7;        // rows x columns guard for the dense LP
  std::uint64_t max_iters = 200000;   // simplex pivots or projection sweeps
};

struct RefinementReport {
  std::string objective_mode;
  std::string constraint_mode;
  double lambda = 0.0;
  double objective = 0.0;            // sum |F - F*| or ||F - F*||_F^2 on the acceleration block
  double stationarity_residual = 0.0;  // ||pi*^T G(F) - pi*^T||_1
  double empirical_residual = 0.0;     // same for F*
  std::optional<double> stationary_l1;  // ||stationary(G(F)) - pi*||_1, chains without absorbing states
  std::optional<double> stationary_hellinger;
  std::optional<double> empirical_stationary_hellinger;
  std::uint64_t iterations = 0;
  std::string solver_status;
  std::size_t variables = 0;
  std::size_t constraints = 0;
};

struct RefinementResult {
  BehaviorModel model;
  RefinementReport report;
};

class InfeasibleRefinement : public std::runtime_error {
 public:
  explicit InfeasibleRefinement(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Variables of the refinement: one (state, acceleration) pair per column
// block. `states` lists the states whose rows may move (target mass > 0).
struct Layout {
  std::vector<std::size_t> states;
  std::vector<std::size_t> stat_rows;  // states whose stationarity is enforced
  std::size_t n_pairs() const { return states.size() * kNumAccels; }
};

inline Layout make_layout(const markov::Kernel& k, const std::vector<double>& pi) {
  Layout l;
  for (std::size_t s = 0; s < k.size(); ++s) {
    if (k.absorbing(s)) continue;
    l.stat_rows.push_back(s);
    if (pi[s] > 0.0) l.states.push_back(s);
  }
  return l;
}

// Dense map from a change D (n_pairs) to the stationarity rows: M D gives
// pi*^T G(D) restricted to stat_rows.
inline Eigen::MatrixXd stationarity_operator(const markov::Kernel& k, const Layout& l,
                                             const std::vector<double>& pi) {
  std::vector<long> row_of(k.size(), -1);
  for (std::size_t r = 0; r < l.stat_rows.size(); ++r) row_of[l.stat_rows[r]] = static_cast<long>(r);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l.stat_rows.size()),
                                            static_cast<Eigen::Index>(l.n_pairs()));
  std::vector<markov::Weighted> succ;
  for (std::size_t si = 0; si < l.states.size(); ++si) {
    const auto s = l.states[si];
    for (int a = kFirstAccel; a <= kLastAccel; ++a) {
      k.successors(s, a, succ);
      const auto col = static_cast<Eigen::Index>(si * kNumAccels + static_cast<std::size_t>(a - kFirstAccel));
      for (const auto& w : succ) {
        const long r = row_of[w.bin];
        if (r >= 0) M(r, col) += pi[s] * w.weight;
      }
    }
  }
  return M;
}

inline Eigen::VectorXd accel_block(const BehaviorModel& f, const Layout& l) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(l.n_pairs()));
  for (std::size_t si = 0; si < l.states.size(); ++si) {
    const auto& p = f.at(l.states[si]).pmf;
    for (int a = kFirstAccel; a <= kLastAccel; ++a) {
      x(static_cast<Eigen::Index>(si * kNumAccels + static_cast<std::size_t>(a - kFirstAccel))) =
          p[static_cast<std::size_t>(a)];
    }
  }
  return x;
}

inline BehaviorModel apply_block(const BehaviorModel& f_star, const Layout& l,
                                 const Eigen::VectorXd& x) {
  BehaviorModel f = f_star;
  for (std::size_t si = 0; si < l.states.size(); ++si) {
    const auto s = l.states[si];
    const auto& src = f_star.at(s);
    ActionPmf p = src.pmf;
    double acc = 0.0;
    for (int a = kFirstAccel; a <= kLastAccel; ++a) {
      double v = x(static_cast<Eigen::Index>(si * kNumAccels + static_cast<std::size_t>(a - kFirstAccel)));
      v = std::max(0.0, v);
      p[static_cast<std::size_t>(a)] = v;
      acc += v;
    }
    // Normalisation holds to solver precision; rescale so rows sum to 1.
    const double target = longitudinal_mass(src.pmf);
    if (acc > 0.0) {
      for (int a = kFirstAccel; a <= kLastAccel; ++a) p[static_cast<std::size_t>(a)] *= target / acc;
    }
    f.set_row(s, p, src.coverage, src.status);
  }
  return f;
}

inline Eigen::VectorXd stationarity_rhs(const markov::Kernel& k, const Layout& l,
                                        const BehaviorModel& f_star, const std::vector<double>& pi) {
  const auto p = markov::assemble(f_star, k);
  const auto flow = p.left_multiply(pi);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(l.stat_rows.size()));
  for (std::size_t r = 0; r < l.stat_rows.size(); ++r) {
    rhs(static_cast<Eigen::Index>(r)) = pi[l.stat_rows[r]] - flow[l.stat_rows[r]];
  }
  return rhs;
}

// Euclidean projection onto {x >= 0, sum x = mass}.
inline void project_simplex(double* x, std::size_t n, double mass) {
  std::vector<double> u(x, x + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - mass) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(0.0, x[i] - theta);
}

struct Solved {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::uint64_t iterations = 0;
  std::string status;
  std::size_t vars = 0;
  std::size_t rows = 0;
};

inline Solved solve_l1(const RefinementProblem& pr, const Layout& l, const Eigen::MatrixXd& M,
                       const Eigen::VectorXd& rhs, const Eigen::VectorXd& x0) {
  const auto np = static_cast<Eigen::Index>(l.n_pairs());
  const auto ns = static_cast<Eigen::Index>(l.states.size());
  const auto nr = M.rows();
  const bool soft = pr.constraint == ConstraintMode::Soft;
  const Eigen::Index nvar = 2 * np + (soft ? 2 * nr : 0);
  const Eigen::Index nrow = ns + nr;
  if (static_cast<double>(nvar) * static_cast<double>(nrow) > pr.max_lp_cells) {
    throw std::invalid_argument("refinement LP with " + std::to_string(nrow) + " rows and " +
                                std::to_string(nvar) +
                                " columns exceeds the dense solver size limit");
  }
  lp::LinearProgram prog;
  prog.A = Eigen::MatrixXd::Zero(nrow, nvar);
  prog.b = Eigen::VectorXd::Zero(nrow);
  prog.c = Eigen::VectorXd::Ones(nvar);
  prog.upper.assign(static_cast<std::size_t>(nvar), lp::kInf);
  // Columns [0, np): u (increase), [np, 2np): w (decrease, at most F*).
  for (Eigen::Index j = 0; j < np; ++j) {
    const Eigen::Index s = j / kNumAccels;
    prog.A(s, j) = 1.0;
    prog.A(s, np + j) = -1.0;
    prog.upper[static_cast<std::size_t>(np + j)] = x0(j);
  }
  prog.A.block(ns, 0, nr, np) = M;
  prog.A.block(ns, np, nr, np) = -M;
  prog.b.tail(nr) = rhs;
  if (soft) {
    for (Eigen::Index r = 0; r < nr; ++r) {
      prog.A(ns + r, 2 * np + r) = 1.0;
      prog.A(ns + r, 2 * np + nr + r) = -1.0;
    }
    prog.c.tail(2 * nr).setConstant(pr.lambda);
  }
  lp::SolverOptions opt;
  opt.max_iters = pr.max_iters;
  const auto sol = lp::solve(prog, opt);
  Solved out;
  out.status = lp::to_string(sol.status);
  out.iterations = sol.iterations;
  out.vars = static_cast<std::size_t>(nvar);
  out.rows = static_cast<std::size_t>(nrow);
  if (sol.status == lp::Status::Infeasible) {
    throw InfeasibleRefinement(
        "hard stationarity constraints are infeasible for this model and target "
        "(phase-one residual " + std::to_string(sol.infeasibility) +
        "); rerun in soft mode, e.g. with lambda = 100");
  }
  if (sol.status != lp::Status::Optimal) {
    throw std::runtime_error(std::string("refinement LP ended with status ") + out.status);
  }
  out.x = x0 + sol.x.head(np) - sol.x.segment(np, np);
  out.objective = (out.x - x0).cwiseAbs().sum();
  return out;
}

// Closest point (Frobenius) of the affine stationarity/normalisation set
// intersected with x >= 0, by Dykstra's alternating projections.
inline Solved solve_frobenius_hard(const RefinementProblem& pr, const Layout& l,
                                   const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& x0) {
  const auto np = static_cast<Eigen::Index>(l.n_pairs());
  const auto ns = static_cast<Eigen::Index>(l.states.size());
  const auto nr = M.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ns + nr, np);
  for (Eigen::Index j = 0; j < np; ++j) A(j / kNumAccels, j) = 1.0;
  A.bottomRows(nr) = M;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ns + nr);
  b.head(ns) = A.topRows(ns) * x0;
  b.tail(nr) = M * x0 + rhs;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> aat(A * A.transpose());
  auto project_affine = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return z - A.transpose() * aat.solve(A * z - b);
  };
  const Eigen::VectorXd check = project_affine(x0);
  if ((A * check - b).cwiseAbs().maxCoeff() > 1e-8) {
    throw InfeasibleRefinement(
        "hard stationarity constraints are inconsistent; rerun in soft mode");
  }
  Eigen::VectorXd x = x0, p = Eigen::VectorXd::Zero(np), q = Eigen::VectorXd::Zero(np);
  Solved out;
  out.vars = static_cast<std::size_t>(np);
  out.rows = static_cast<std::size_t>(ns + nr);
  out.status = "iteration_limit";
  for (std::uint64_t it = 0; it < pr.max_iters; ++it) {
    const Eigen::VectorXd y = project_affine(x + p);
    p = x + p - y;
    const Eigen::VectorXd xn = (y + q).cwiseMax(0.0);
    q = y + q - xn;
    const double change = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    out.iterations = it + 1;
    if (change < 1e-13 && (A * x - b).cwiseAbs().maxCoeff() < 1e-10) {
      out.status = "converged";
      break;
    }
  }
  if (x.minCoeff() < 0.0 || (A * x - b).cwiseAbs().maxCoeff() > 1e-6) {
    throw InfeasibleRefinement(
        "alternating projections found no nonnegative stationary model; rerun in soft mode");
  }
  out.x = x;
  out.objective = (x - x0).squaredNorm();
  return out;
}

// Projected subgradient on ||x - x0||^2 + lambda ||M (x - x0) - rhs||_1 over
// the per-row simplices.
inline Solved solve_frobenius_soft(const RefinementProblem& pr, const Layout& l,
                                   const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& x0) {
  const auto ns = l.states.size();
  std::vector<double> mass(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    mass[s] = x0.segment(static_cast<Eigen::Index>(s * kNumAccels), kNumAccels).sum();
  }
  auto f = [&](const Eigen::VectorXd& x) {
    return (x - x0).squaredNorm() + pr.lambda * (M * (x - x0) - rhs).cwiseAbs().sum();
  };
  Eigen::VectorXd x = x0, best = x0;
  double fbest = f(x0);
  const double scale = 1.0 / (1.0 + pr.lambda * M.cwiseAbs().colwise().sum().maxCoeff());
  Solved out;
  out.vars = static_cast<std::size_t>(x0.size());
  out.rows = ns + static_cast<std::size_t>(M.rows());
  const std::uint64_t iters = std::min<std::uint64_t>(pr.max_iters, 20000);
  for (std::uint64_t it = 0; it < iters; ++it) {
    const Eigen::VectorXd r = M * (x - x0) - rhs;
    const Eigen::VectorXd g = 2.0 * (x - x0) + pr.lambda * M.transpose() * r.unaryExpr([](double v) {
      return static_cast<double>((v > 0) - (v < 0));
    });
    x -= (scale / std::sqrt(static_cast<double>(it) + 1.0)) * g;
    for (std::size_t s = 0; s < ns; ++s) {
      project_simplex(x.data() + s * kNumAccels, kNumAccels, mass[s]);
    }
    const double fx = f(x);
    if (fx < fbest) {
      fbest = fx;
      best = x;
    }
    out.iterations = it + 1;
  }
  out.status = "subgradient";
  out.x = best;
  out.objective = (best - x0).squaredNorm();
  return out;
}

}  // namespace detail

/// Minimal change to the acceleration part of F* such that the target
/// distribution is stationary for the assembled chain (hard mode), or such
/// that the stationarity residual is penalised (soft mode). Lane-change
/// entries are carried over from F* unchanged.
inline RefinementResult refine(const RefinementProblem& pr, const markov::Kernel& k) {
  const auto& f_star = pr.f_star;
  if (pr.pi_star.size() != k.size()) throw std::invalid_argument("target length does not match the grid");
  double total = 0.0;
  for (double v : pr.pi_star) {
    if (!(v >= 0.0)) throw std::invalid_argument("target distribution has negative entries");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("target distribution must sum to 1");
  if (pr.constraint == ConstraintMode::Soft && !(pr.lambda > 0.0)) {
    throw std::invalid_argument("soft mode needs lambda > 0");
  }
  markov::require_covered(f_star, k);

  const auto layout = detail::make_layout(k, pr.pi_star);
  const double cells = static_cast<double>(layout.states.size() + layout.stat_rows.size()) *
                       2.0 * static_cast<double>(layout.n_pairs());
  if (cells > pr.max_lp_cells) {
    throw std::invalid_argument("refinement over " + std::to_string(layout.states.size()) +
                                " states exceeds the dense solver size limit; use a coarser grid");
  }
  const Eigen::MatrixXd M = detail::stationarity_operator(k, layout, pr.pi_star);
  const Eigen::VectorXd rhs = detail::stationarity_rhs(k, layout, f_star, pr.pi_star);
  const Eigen::VectorXd x0 = detail::accel_block(f_star, layout);

  detail::Solved s;
  if (pr.objective == Objective::L1) {
    s = detail::solve_l1(pr, layout, M, rhs, x0);
  } else if (pr.constraint == ConstraintMode::Hard) {
    s = detail::solve_frobenius_hard(pr, layout, M, rhs, x0);
  } else {
    s = detail::solve_frobenius_soft(pr, layout, M, rhs, x0);
  }

  RefinementResult res{detail::apply_block(f_star, layout, s.x), {}};
  auto& rep = res.report;
  rep.objective_mode = to_string(pr.objective);
  rep.constraint_mode = to_string(pr.constraint);
  rep.lambda = pr.constraint == ConstraintMode::Soft ? pr.lambda : 0.0;
  rep.iterations = s.iterations;
  rep.solver_status = s.status;
  rep.variables = s.vars;
  rep.constraints = s.rows;
  const Eigen::VectorXd xf = detail::accel_block(res.model, layout);
  rep.objective = pr.objective == Objective::L1 ? (xf - x0).cwiseAbs().sum() : (xf - x0).squaredNorm();

  const auto p_new = markov::assemble(res.model, k);
  const auto p_old = markov::assemble(f_star, k);
  rep.stationarity_residual = markov::stationarity_residual(p_new, pr.pi_star);
  rep.empirical_residual = markov::stationarity_residual(p_old, pr.pi_star);
  bool absorbing = false;
  for (std::size_t i = 0; i < k.size() && !absorbing; ++i) absorbing = k.absorbing(i);
  if (!absorbing) {
    const auto st_new = markov::stationary(p_new);
    const auto st_old = markov::stationary(p_old);
    rep.stationary_l1 = markov::l1_distance(st_new.pi, pr.pi_star);
    rep.stationary_hellinger = metrics::hellinger(st_new.pi, pr.pi_star);
    rep.empirical_stationary_hellinger = metrics::hellinger(st_old.pi, pr.pi_star);
  }
  return res;
}

inline RefinementResult refine_free_driving(const RefinementProblem& pr) {
  return refine(pr, markov::FreeDrivingKernel(pr.f_star.grid(), pr.dt_mc));
}

inline RefinementResult refine_car_following(const RefinementProblem& pr) {
  return refine(pr, markov::CarFollowingKernel(pr.f_star.grid(), pr.dt_mc, pr.max_brake));
}

}  // namespace nde::refine
