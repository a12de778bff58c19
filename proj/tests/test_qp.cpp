#include <gtest/gtest.h>

#include <random>

#include "rntc/qp.hpp"

using namespace rntc;

namespace {

QpProblem random_problem(std::mt19937_64& rng, int n, int m, double rho) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  QpProblem p;
  Eigen::MatrixXd A(n, n);
  for (auto& v : A.reshaped()) v = N(rng);
  p.H = A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.g.resize(n);
  for (auto& v : p.g) v = 3.0 * N(rng);
  p.lb.resize(n);
  p.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    p.lb[i] = -U(rng);
    p.ub[i] = U(rng);
  }
  p.J.resize(m, n);
  for (auto& v : p.J.reshaped()) v = N(rng);
  p.c.resize(m);
  for (auto& v : p.c) v = N(rng);
  p.rho = rho;
  return p;
}

/// KKT certificate of the penalized problem: soft-row multipliers consistent with the row state,
/// and the remaining gradient explained by the active bounds.
void expect_kkt(const QpProblem& p, const QpResult& r, double tol) {
  const Eigen::VectorXd row = p.c + p.J * r.x;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double lam = r.multipliers[j];
    EXPECT_GE(lam, -tol);
    EXPECT_LE(lam, p.rho + tol * p.rho);
    if (row[j] > tol) { EXPECT_NEAR(lam, 0.0, tol) << "row " << j; }
    if (row[j] < -tol) { EXPECT_NEAR(lam, p.rho, tol * p.rho) << "row " << j; }
  }
  const Eigen::VectorXd grad = p.H * r.x + p.g - p.J.transpose() * r.multipliers;
  const double scale = 1.0 + grad.cwiseAbs().maxCoeff() + p.g.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < r.x.size(); ++i) {
    EXPECT_GE(r.x[i], p.lb[i] - tol);
    EXPECT_LE(r.x[i], p.ub[i] + tol);
    const bool at_lb = r.x[i] <= p.lb[i] + tol, at_ub = r.x[i] >= p.ub[i] - tol;
    if (!at_lb && !at_ub) { EXPECT_NEAR(grad[i], 0.0, tol * scale) << "free variable " << i; }
    if (at_lb && !at_ub) { EXPECT_GE(grad[i], -tol * scale); }
    if (at_ub && !at_lb) { EXPECT_LE(grad[i], tol * scale); }
  }
}

}  // namespace

TEST(Qp, UnconstrainedInteriorOptimum) {
  QpProblem p;
  p.H = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 4.0}};
  p.g = Eigen::Vector2d(-1.0, -1.0);
  p.lb = Eigen::Vector2d::Constant(-10.0);
  p.ub = Eigen::Vector2d::Constant(10.0);
  p.J.resize(0, 2);
  p.c.resize(0);
  const QpResult r = solve_qp(p);
  EXPECT_TRUE(r.optimal);
  EXPECT_NEAR(r.x[0], 0.5, 1e-12);
  EXPECT_NEAR(r.x[1], 0.25, 1e-12);
}

TEST(Qp, BoundsClip) {
  QpProblem p;
  p.H = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d(-5.0, 5.0);
  p.lb = Eigen::Vector2d(-1.0, -1.0);
  p.ub = Eigen::Vector2d(1.0, 1.0);
  p.J.resize(0, 2);
  p.c.resize(0);
  const QpResult r = solve_qp(p);
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r.x[1], -1.0, 1e-12);
}

TEST(Qp, FeasibleRowIsEnforcedExactly) {
  // min 0.5 |x - (2, 0)|^2 s.t. x0 <= 1 written as 1 - x0 >= 0.
  QpProblem p;
  p.H = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d(-2.0, 0.0);
  p.lb = Eigen::Vector2d::Constant(-5.0);
  p.ub = Eigen::Vector2d::Constant(5.0);
  p.J = Eigen::RowVector2d(-1.0, 0.0);
  p.c = Eigen::VectorXd::Constant(1, 1.0);
  const QpResult r = solve_qp(p);
  EXPECT_TRUE(r.optimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-10);
  EXPECT_NEAR(r.multipliers[0], 1.0, 1e-10);
  EXPECT_NEAR(r.slack, 0.0, 1e-10);
}

TEST(Qp, InfeasibleRowsAreRelaxed) {
  // x0 >= 3 is out of reach of the box [-1, 1]: the slack absorbs the gap at price rho.
  QpProblem p;
  p.H = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d::Zero();
  p.lb = Eigen::Vector2d::Constant(-1.0);
  p.ub = Eigen::Vector2d::Constant(1.0);
  p.J = Eigen::RowVector2d(1.0, 0.0);
  p.c = Eigen::VectorXd::Constant(1, -3.0);
  p.rho = 100.0;
  const QpResult r = solve_qp(p);
  EXPECT_TRUE(r.optimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r.slack, 2.0, 1e-12);
  EXPECT_NEAR(r.multipliers[0], 100.0, 1e-9);
  EXPECT_NEAR(r.objective, qp_objective(p, r.x), 1e-12);
}

TEST(Qp, RandomProblemsSatisfyKkt) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 400; ++t) {
    const int n = 2 + t % 12, m = t % 9;
    const QpProblem p = random_problem(rng, n, m, t % 2 ? 10.0 : 1e4);
    const QpResult r = solve_qp(p);
    ASSERT_TRUE(r.optimal) << "problem " << t;
    expect_kkt(p, r, 1e-6);
    // No random feasible point does better.
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) y[i] = p.lb[i] + U(rng) * (p.ub[i] - p.lb[i]);
      EXPECT_LE(r.objective, qp_objective(p, y) + 1e-9);
    }
  }
}
