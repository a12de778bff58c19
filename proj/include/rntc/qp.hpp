#pragma once

#include <Eigen/Core>

namespace rntc {

/// min 0.5 x'Hx + g'x + rho * sum_j max(0, -(c_j + J_j x))   s.t.  lb <= x <= ub
///
/// The soft rows are the L1 exact-penalty form of J x + c >= 0 (slacks eliminated).
/// H must be symmetric positive definite and lb <= 0 <= ub.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  Eigen::MatrixXd J;
  Eigen::VectorXd c;
  double rho = 1e4;
};

struct QpResult {
  Eigen::VectorXd x;
  /// Soft-row multipliers in [0, rho]; rho marks a row paid for by its slack.
  Eigen::VectorXd multipliers;
  int iterations = 0;
  bool optimal = false;
  /// sum_j max(0, -(c_j + J_j x)).
  double slack = 0.0;
  double objective = 0.0;
};

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& x);

/// Primal active-set method: the working set holds fixed bounds and soft rows sitting on
/// their kink (J_j x = -c_j); every other row is either satisfied or linearly penalized.
QpResult solve_qp(const QpProblem& problem, int max_iterations = 500);

}  // namespace rntc
