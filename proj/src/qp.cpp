#include "rntc/qp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rntc/errors.hpp"

namespace rntc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Bound : signed char { Free, Lower, Upper };
enum class Row : signed char { Satisfied, Kink, Violated };

}  // namespace

double qp_objective(const QpProblem& p, const Eigen::VectorXd& x) {
  double f = 0.5 * x.dot(p.H * x) + p.g.dot(x);
  if (p.J.rows() > 0) f += p.rho * (-(p.c + p.J * x)).cwiseMax(0.0).sum();
  return f;
}

QpResult solve_qp(const QpProblem& p, int max_iterations) {
  const Eigen::Index n = p.g.size();
  const Eigen::Index m = p.c.size();
  if (p.H.rows() != n || p.H.cols() != n || p.lb.size() != n || p.ub.size() != n || p.J.rows() != m ||
      (m > 0 && p.J.cols() != n)) {
    throw ConfigError("solve_qp: inconsistent dimensions");
  }
  if ((p.lb.array() > 0.0).any() || (p.ub.array() < 0.0).any()) {
    throw ConfigError("solve_qp: bounds must bracket the origin");
  }

  QpResult result;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<Bound> bounds(static_cast<std::size_t>(n), Bound::Free);
  std::vector<Row> rows(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) rows[j] = p.c[j] < 0.0 ? Row::Violated : Row::Satisfied;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);

  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    Eigen::VectorXd grad = p.H * x + p.g;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (rows[j] == Row::Violated) grad -= p.rho * p.J.row(j).transpose();
    }

    std::vector<Eigen::Index> free, kinks;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (bounds[i] == Bound::Free) free.push_back(i);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (rows[j] == Row::Kink) kinks.push_back(j);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    const auto nk = static_cast<Eigen::Index>(kinks.size());

    // Step on the free variables keeping kink rows fixed: [H_ff  -A'; A  0] [d; mu] = [-grad_f; 0].
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + nk, nf + nk);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + nk);
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = p.H(free[a], free[b]);
      rhs[a] = -grad[free[a]];
      for (Eigen::Index k = 0; k < nk; ++k) {
        kkt(a, nf + k) = -p.J(kinks[k], free[a]);
        kkt(nf + k, a) = p.J(kinks[k], free[a]);
      }
    }
    const Eigen::VectorXd sol = nf + nk > 0 ? Eigen::VectorXd(kkt.fullPivLu().solve(rhs)) : Eigen::VectorXd();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < nf; ++a) d[free[a]] = sol[a];

    if (d.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      Eigen::VectorXd mu(nk);
      for (Eigen::Index k = 0; k < nk; ++k) mu[k] = sol[nf + k];
      Eigen::VectorXd residual = grad;
      for (Eigen::Index k = 0; k < nk; ++k) residual -= mu[k] * p.J.row(kinks[k]).transpose();

      // Most violated optimality condition, scaled to be comparable across bounds and rows.
      const double gscale = 1e-9 * (1.0 + grad.lpNorm<Eigen::Infinity>());
      double worst = 0.0;
      Eigen::Index bound_out = -1, row_out = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double viol = bounds[i] == Bound::Lower ? -residual[i] : bounds[i] == Bound::Upper ? residual[i] : 0.0;
        if (viol > gscale && viol > worst) worst = viol, bound_out = i, row_out = -1;
      }
      for (Eigen::Index k = 0; k < nk; ++k) {
        const double viol = std::max(-mu[k], mu[k] - p.rho);
        const double rel = viol / (1.0 + p.J.row(kinks[k]).norm());
        if (viol > 1e-9 * (1.0 + p.rho) && rel > worst) worst = rel, row_out = k, bound_out = -1;
      }
      if (bound_out < 0 && row_out < 0) {
        result.optimal = true;
        lambda.setZero();
        for (Eigen::Index k = 0; k < nk; ++k) lambda[kinks[k]] = std::clamp(mu[k], 0.0, p.rho);
        for (Eigen::Index j = 0; j < m; ++j) {
          if (rows[j] == Row::Violated) lambda[j] = p.rho;
        }
        break;
      }
      if (bound_out >= 0) {
        bounds[bound_out] = Bound::Free;
      } else {
        rows[kinks[row_out]] = mu[row_out] < 0.0 ? Row::Satisfied : Row::Violated;
      }
      continue;
    }

    // Exact minimization of the piecewise quadratic along d, capped by the first bound hit.
    double alpha_max = kInf;
    Eigen::Index bound_hit = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (bounds[i] != Bound::Free || d[i] == 0.0) continue;
      const double a = std::max(0.0, ((d[i] < 0.0 ? p.lb[i] : p.ub[i]) - x[i]) / d[i]);
      if (a < alpha_max) alpha_max = a, bound_hit = i;
    }

    struct Breakpoint {
      double alpha;
      double jump;
      Eigen::Index row;
    };
    std::vector<Breakpoint> breaks;
    if (m > 0) {
      const Eigen::VectorXd r = p.c + p.J * x;
      const Eigen::VectorXd jd = p.J * d;
      for (Eigen::Index j = 0; j < m; ++j) {
        const bool crossing = (rows[j] == Row::Satisfied && jd[j] < 0.0) || (rows[j] == Row::Violated && jd[j] > 0.0);
        if (crossing) breaks.push_back({std::max(0.0, -r[j] / jd[j]), p.rho * std::abs(jd[j]), j});
      }
    }
    std::sort(breaks.begin(), breaks.end(), [](const Breakpoint& a, const Breakpoint& b) {
      return a.alpha < b.alpha || (a.alpha == b.alpha && a.row < b.row);
    });

    const double curvature = d.dot(p.H * d);
    double slope = grad.dot(d);
    double at = 0.0;
    double alpha = kInf;
    Eigen::Index kink_hit = -1;
    std::size_t crossed = 0;
    for (const auto& bp : breaks) {
      if (bp.alpha > alpha_max) break;
      if (slope + curvature * (bp.alpha - at) >= 0.0) {
        alpha = curvature > 0.0 ? at - slope / curvature : at;
        break;
      }
      slope += curvature * (bp.alpha - at);
      at = bp.alpha;
      if (slope + bp.jump >= 0.0) {
        alpha = bp.alpha;
        kink_hit = bp.row;
        break;
      }
      slope += bp.jump;
      ++crossed;
    }
    if (alpha == kInf && kink_hit < 0) alpha = curvature > 0.0 ? at - slope / curvature : (slope < 0.0 ? kInf : at);
    // d is the exact minimizer of the current piece, so alpha <= 1 up to rounding.
    if (kink_hit < 0) alpha = std::min(alpha, 1.0);
    bool hit_bound = false;
    if (alpha >= alpha_max) {
      if (kink_hit >= 0 && alpha == alpha_max) {
        // Kink and bound coincide: take the kink; the bound is picked up next iteration.
      } else {
        alpha = alpha_max;
        kink_hit = -1;
        hit_bound = true;
      }
    }
    if (!std::isfinite(alpha)) throw NumericalError("solve_qp: unbounded direction (H not positive definite?)");

    for (std::size_t b = 0; b < crossed; ++b) {
      const Eigen::Index j = breaks[b].row;
      if (breaks[b].alpha > alpha) break;
      rows[j] = rows[j] == Row::Satisfied ? Row::Violated : Row::Satisfied;
    }
    x += alpha * d;
    if (hit_bound) {
      bounds[bound_hit] = d[bound_hit] < 0.0 ? Bound::Lower : Bound::Upper;
      x[bound_hit] = d[bound_hit] < 0.0 ? p.lb[bound_hit] : p.ub[bound_hit];
    }
    if (kink_hit >= 0) rows[kink_hit] = Row::Kink;
  }

  for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(x[i], p.lb[i], p.ub[i]);
  result.x = x;
  result.multipliers = lambda;
  result.slack = m > 0 ? (-(p.c + p.J * x)).cwiseMax(0.0).sum() : 0.0;
  result.objective = qp_objective(p, x);
  return result;
}

}  // namespace rntc
