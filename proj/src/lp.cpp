#include "advaug/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace advaug {

namespace {

using Eigen::Index;

struct Tableau {
  Eigen::MatrixXd t;         // rows 0..m-1 constraints, row m objective; last column rhs
  std::vector<Index> basis;  // basic column per constraint row
  std::vector<bool> active;  // false for rows dropped as redundant
};

void pivot(Tableau& tab, Index row, Index col) {
  auto& t = tab.t;
  t.row(row) /= t(row, col);
  for (Index i = 0; i < t.rows(); ++i) {
    if (i == row) continue;
    const double f = t(i, col);
    if (f != 0.0) t.row(i) -= f * t.row(row);
  }
  tab.basis[static_cast<std::size_t>(row)] = col;
}

// Maximizes the objective row over columns [0, n_cols). Returns false if unbounded.
bool run(Tableau& tab, Index n_cols, double tol, int& pivots) {
  auto& t = tab.t;
  const Index m = t.rows() - 1;
  const Index rhs = t.cols() - 1;
  for (;;) {
    Index enter = -1;
    for (Index j = 0; j < n_cols; ++j) {
      if (t(m, j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (!tab.active[static_cast<std::size_t>(i)] || t(i, enter) <= tol) continue;
      best = std::min(best, t(i, rhs) / t(i, enter));
    }
    Index leave = -1;
    for (Index i = 0; i < m; ++i) {
      if (!tab.active[static_cast<std::size_t>(i)] || t(i, enter) <= tol) continue;
      if (t(i, rhs) / t(i, enter) > best + tol) continue;
      if (leave < 0 ||
          tab.basis[static_cast<std::size_t>(i)] < tab.basis[static_cast<std::size_t>(leave)])
        leave = i;
    }
    if (leave < 0) return false;
    pivot(tab, leave, enter);
    ++pivots;
  }
}

}  // namespace

LpSolution solve_lp_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c, double tol) {
  const Index m = A.rows();
  const Index n = A.cols();
  if (b.size() != m || c.size() != n) throw std::invalid_argument("solve_lp_max: shape mismatch");

  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  tab.active.assign(static_cast<std::size_t>(m), true);
  const Index rhs = n + m;
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    tab.t.block(i, 0, 1, n) = sign * A.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, rhs) = sign * b(i);
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }

  // Phase 1: maximize -sum(artificials), expressed in reduced form.
  for (Index i = 0; i < m; ++i) tab.t.row(m) -= tab.t.row(i);
  for (Index i = 0; i < m; ++i) tab.t(m, n + i) = 0.0;

  LpSolution sol;
  run(tab, n + m, tol, sol.pivots);
  const double scale = 1.0 + b.cwiseAbs().sum();
  if (-tab.t(m, rhs) > 1e3 * tol * scale) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Drive remaining artificials out of the basis; rows with no usable pivot are redundant.
  for (Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    Index col = -1;
    for (Index j = 0; j < n; ++j) {
      if (std::abs(tab.t(i, j)) > 1e3 * tol) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      pivot(tab, i, col);
      ++sol.pivots;
    } else {
      tab.active[static_cast<std::size_t>(i)] = false;
    }
  }

  // Phase 2 objective row: -c_j + c_B B^{-1} A_j.
  tab.t.row(m).setZero();
  tab.t.block(m, 0, 1, n) = -c.transpose();
  for (Index i = 0; i < m; ++i) {
    if (!tab.active[static_cast<std::size_t>(i)]) continue;
    const Index bcol = tab.basis[static_cast<std::size_t>(i)];
    if (bcol < n) tab.t.row(m) += c(bcol) * tab.t.row(i);
  }
  if (!run(tab, n, tol, sol.pivots)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < m; ++i) {
    if (!tab.active[static_cast<std::size_t>(i)]) continue;
    const Index bcol = tab.basis[static_cast<std::size_t>(i)];
    if (bcol < n) sol.x(bcol) = std::max(0.0, tab.t(i, rhs));
  }
  sol.objective = c.dot(sol.x);
  return sol;
}

}  // namespace advaug
