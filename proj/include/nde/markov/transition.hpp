#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace nde::markov {

/// Row-stochastic matrix in compressed sparse row form. Column indices
/// within a row are strictly increasing.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t n, double dt_mc = 1.0) : n_(n), dt_mc_(dt_mc) {
    row_ptr_.assign(1, 0);
  }

  std::size_t size() const { return n_; }
  double dt_mc() const { return dt_mc_; }
  std::size_t nonzeros() const { return val_.size(); }

  // Rows must be appended in order 0..n-1.
  void append_row(const std::vector<std::pair<std::size_t, double>>& entries) {
    if (rows() >= n_) throw std::logic_error("too many rows appended");
    std::size_t last = 0;
    bool first = true;
    for (const auto& [c, v] : entries) {
      if (c >= n_ || (!first && c <= last)) {
        throw std::invalid_argument("row entries must be sorted, unique and in range");
      }
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("transition probabilities must be finite and >= 0");
      }
      first = false;
      last = c;
      col_.push_back(c);
      val_.push_back(v);
    }
    row_ptr_.push_back(col_.size());
  }

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }

  struct RowView {
    const std::size_t* cols;
    const double* vals;
    std::size_t count;
  };
  RowView row(std::size_t i) const {
    const auto b = row_ptr_.at(i);
    return {col_.data() + b, val_.data() + b, row_ptr_[i + 1] - b};
  }

  double at(std::size_t i, std::size_t j) const {
    const auto r = row(i);
    for (std::size_t k = 0; k < r.count; ++k) {
      if (r.cols[k] == j) return r.vals[k];
    }
    return 0.0;
  }

  // y^T = x^T P
  std::vector<double> left_multiply(const std::vector<double>& x) const {
    if (x.size() != n_) throw std::invalid_argument("vector length does not match matrix");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_[k]] += xi * val_[k];
    }
    return y;
  }

  double max_row_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (val_[k] < 0.0) return std::numeric_limits<double>::infinity();
        s += val_[k];
      }
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  bool is_stochastic(double tol = 1e-9) const { return rows() == n_ && max_row_error() <= tol; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                              static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < rows(); ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_[k])) = val_[k];
      }
    }
    return d;
  }

  static TransitionMatrix from_dense(const Eigen::MatrixXd& d, double dt_mc = 1.0) {
    if (d.rows() != d.cols()) throw std::invalid_argument("transition matrix must be square");
    TransitionMatrix p(static_cast<std::size_t>(d.rows()), dt_mc);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      std::vector<std::pair<std::size_t, double>> e;
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        if (d(i, j) != 0.0) e.emplace_back(static_cast<std::size_t>(j), d(i, j));
      }
      p.append_row(e);
    }
    return p;
  }

  // Sparse triplets, one "row,col,value" line per nonzero.
  std::string to_csv() const {
    std::string out = fmt::format("# dt_mc: {}\n# size: {}\nrow,col,value\n", dt_mc_, n_);
    auto it = std::back_inserter(out);
    for (std::size_t i = 0; i < rows(); ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        fmt::format_to(it, "{},{},{}\n", i, col_[k], val_[k]);
      }
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  double dt_mc_ = 1.0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

}  // namespace nde::markov
