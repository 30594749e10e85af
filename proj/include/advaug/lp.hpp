#pragma once

#include <Eigen/Dense>

namespace advaug {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  int pivots = 0;
};

// maximize c^T x  subject to  A x = b,  x >= 0.
// Dense two-phase simplex with Bland's rule; intended for the small transport
// programs used as exact oracles (a few thousand columns at most).
LpSolution solve_lp_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c, double tol = 1e-12);

}  // namespace advaug
