#pragma once

#include <cmath>
#include <iterator>
#include <string>

#include <fmt/format.h>

#include "nde/lp/simplex.hpp"

namespace nde::lp {

// CPLEX LP text format, readable by most external solvers (HiGHS, GLPK,
// CPLEX, Gurobi) for cross-checking.
inline std::string to_lp_format(const LinearProgram& lp, const std::string& name = "nde") {
  lp.validate();
  auto var = [&](Eigen::Index j) {
    return lp.var_names.empty() ? fmt::format("x{}", j) : lp.var_names[static_cast<std::size_t>(j)];
  };
  auto row = [&](Eigen::Index i) {
    return lp.row_names.empty() ? fmt::format("c{}", i) : lp.row_names[static_cast<std::size_t>(i)];
  };
  std::string out;
  auto it = std::back_inserter(out);
  fmt::format_to(it, "\\ {}\nMinimize\n obj:", name);
  bool any = false;
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    if (lp.c(j) == 0.0) continue;
    fmt::format_to(it, " {} {} {}", lp.c(j) < 0 ? "-" : "+", std::abs(lp.c(j)), var(j));
    any = true;
  }
  if (!any && lp.cols() > 0) fmt::format_to(it, " 0 {}", var(0));
  out += "\nSubject To\n";
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    fmt::format_to(it, " {}:", row(i));
    bool first = true;
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
      const double a = lp.A(i, j);
      if (a == 0.0) continue;
      fmt::format_to(it, " {} {} {}", a < 0 ? "-" : "+", std::abs(a), var(j));
      first = false;
    }
    if (first && lp.cols() > 0) fmt::format_to(it, " 0 {}", var(0));
    fmt::format_to(it, " = {}\n", lp.b(i));
  }
  out += "Bounds\n";
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    const double u = lp.upper_bound(j);
    if (u == kInf) {
      fmt::format_to(it, " {} >= 0\n", var(j));
    } else {
      fmt::format_to(it, " 0 <= {} <= {}\n", var(j), u);
    }
  }
  out += "End\n";
  return out;
}

}  // namespace nde::lp
