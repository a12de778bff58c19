#include "rntc/mpc.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "rntc/errors.hpp"
#include "rntc/qp.hpp"

namespace rntc {

namespace {

using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 5, 1>>;

bool symmetric_psd(const Eigen::MatrixXd& M, double min_eig) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  return es.eigenvalues().minCoeff() >= min_eig;
}

double l1_violation(const Eigen::VectorXd& h) { return (-h).cwiseMax(0.0).sum(); }

}  // namespace

State step_dynamics(const State& x, const Control& u, double dt) {
  State next = rk4<double>(x, u, dt);
  next(2) = wrap_angle(next(2));
  return next;
}

void dynamics_jacobians(const State& x, const Control& u, double dt, Eigen::Matrix3d& A,
                        Eigen::Matrix<double, 3, 2>& B) {
  Eigen::Matrix<Dual, 3, 1> xd;
  Eigen::Matrix<Dual, 2, 1> ud;
  for (int i = 0; i < 3; ++i) xd(i) = Dual(x(i), 5, i);
  for (int i = 0; i < 2; ++i) ud(i) = Dual(u(i), 5, 3 + i);
  const Eigen::Matrix<Dual, 3, 1> out = rk4<Dual>(xd, ud, dt);
  for (int r = 0; r < 3; ++r) {
    A.row(r) = out(r).derivatives().head<3>().transpose();
    B.row(r) = out(r).derivatives().tail<2>().transpose();
  }
}

State state_error(const State& x, const State& reference) {
  State e = x - reference;
  e(2) = wrap_angle(e(2));
  return e;
}

std::string to_string(TerminalMode mode) {
  switch (mode) {
    case TerminalMode::Rntc: return "rntc";
    case TerminalMode::Sdf: return "sdf";
    case TerminalMode::Dcbf: return "dcbf";
    case TerminalMode::None: return "none";
  }
  return "?";
}

TerminalMode terminal_mode_from_string(const std::string& name) {
  if (name == "rntc") return TerminalMode::Rntc;
  if (name == "sdf") return TerminalMode::Sdf;
  if (name == "dcbf") return TerminalMode::Dcbf;
  if (name == "none") return TerminalMode::None;
  throw ConfigError("unknown planner mode '" + name + "' (expected rntc, sdf, dcbf or none)");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max-iter";
    case SolveStatus::InfeasibleRelaxed: return "infeasible-relaxed";
  }
  return "?";
}

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc: horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("mpc: dt must be positive");
  if (!symmetric_psd(Q, 0.0) || !symmetric_psd(Q_terminal, 0.0)) throw ConfigError("mpc: Q and Q_N must be symmetric PSD");
  if (!symmetric_psd(R, 1e-12)) throw ConfigError("mpc: R must be symmetric positive definite");
  if (!(v_max > 0.0 && omega_max > 0.0)) throw ConfigError("mpc: control bounds must be positive");
  if (!(slack_penalty > 0.0)) throw ConfigError("mpc: slack penalty must be positive");
  if (!(gamma_cbf > 0.0 && gamma_cbf <= 1.0)) throw ConfigError("mpc: gamma_cbf must lie in (0, 1]");
  if (max_iterations < 1) throw ConfigError("mpc: max_iterations must be >= 1");
  if (!(prune_distance > 0.0)) throw ConfigError("mpc: prune distance must be positive");
  if (!(inflation >= 0.0 && safety_margin >= 0.0)) throw ConfigError("mpc: inflation and safety margin must be >= 0");
}

double ResidualSource::value(const State& x) const {
  const std::span<const double> view(theta.data(), static_cast<std::size_t>(theta.size()));
  return net->forward(view, normalizer.normalize(x));
}

State ResidualSource::gradient(const State& x) const {
  const std::span<const double> view(theta.data(), static_cast<std::size_t>(theta.size()));
  return net->grad_input(view, normalizer.normalize(x)).cwiseProduct(normalizer.scale());
}

MpcProblem build_problem(const MpcConfig& config, const State& x0, std::vector<State> reference,
                         const EnvironmentSnapshot& snapshot, std::optional<ResidualSource> residual) {
  config.validate();
  if (static_cast<int>(reference.size()) != config.horizon + 1) {
    throw ConfigError("mpc: reference must have horizon + 1 states");
  }
  if (config.mode == TerminalMode::Rntc) {
    if (!residual || residual->net == nullptr) throw ConfigError("mpc: RNTC mode requires main-network parameters");
    if (residual->net->mode() != HeadMode::Residual) throw ConfigError("mpc: RNTC mode requires a residual-head model");
    if (residual->theta.size() != residual->net->parameter_count()) {
      throw ConfigError("mpc: main-network parameter vector has the wrong length");
    }
  }
  MpcProblem p;
  p.config = config;
  p.x0 = x0;
  p.reference = std::move(reference);
  p.snapshot = snapshot;
  p.residual = std::move(residual);
  for (int i = 0; i <= config.horizon; ++i) p.predicted.push_back(predict(snapshot, i * config.dt));
  return p;
}

double terminal_value(const MpcProblem& p, const State& x) {
  const int N = p.config.horizon;
  const double f = sdf_eval(p.predicted[N], x.head<2>(), p.config.inflation + p.config.safety_margin, p.config.clamp);
  if (p.config.mode == TerminalMode::Rntc) return f - p.residual->value(x);
  return f;
}

ConstraintSet evaluate_constraints(const MpcProblem& p, std::span<const State> X, bool prune) {
  const MpcConfig& c = p.config;
  const int N = c.horizon;
  if (static_cast<int>(X.size()) != N + 1) throw ConfigError("mpc: state trajectory must have N + 1 entries");
  const double limit = prune ? c.prune_distance : std::numeric_limits<double>::infinity();
  const Eigen::Index cols = 3 * (N + 1);

  std::vector<ConstraintRow> rows;
  std::vector<double> values;
  std::vector<Eigen::RowVectorXd> jac;
  auto add = [&](ConstraintRow row, double value, Eigen::RowVectorXd grad) {
    rows.push_back(row);
    values.push_back(value);
    jac.push_back(std::move(grad));
  };
  auto distance = [&](int stage, std::size_t j, const State& x) {
    return obstacle_distance(p.predicted[stage].obstacles[j], x.head<2>(), c.inflation + c.safety_margin);
  };
  auto distance_grad = [&](int stage, std::size_t j, const State& x) {
    return obstacle_distance_gradient(p.predicted[stage].obstacles[j], x.head<2>());
  };
  const std::size_t M = p.snapshot.obstacles.size();

  if (c.mode == TerminalMode::Sdf || c.mode == TerminalMode::Rntc) {
    const int last_stage = c.mode == TerminalMode::Sdf ? N : N - 1;
    for (int i = 1; i <= last_stage; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        const double d = distance(i, j, X[i]);
        if (d > limit && i < N) continue;
        Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(cols);
        g.segment<2>(3 * i) = distance_grad(i, j, X[i]).transpose();
        add({i == N ? ConstraintKind::Terminal : ConstraintKind::Stage, i, static_cast<int>(j)}, d, std::move(g));
      }
    }
  }
  if (c.mode == TerminalMode::Rntc) {
    const State& xN = X[N];
    const double r = p.residual->value(xN);
    const State gr = p.residual->gradient(xN);
    for (std::size_t j = 0; j < M; ++j) {
      Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(cols);
      g.segment<2>(3 * N) = distance_grad(N, j, xN).transpose();
      g.segment<3>(3 * N) -= gr.transpose();
      add({ConstraintKind::Terminal, N, static_cast<int>(j)}, distance(N, j, xN) - r, std::move(g));
    }
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(cols);
    g.segment<3>(3 * N) = -gr.transpose();
    add({ConstraintKind::TerminalClamp, N, -1}, c.clamp - r, std::move(g));
  }
  if (c.mode == TerminalMode::Dcbf) {
    const double keep = 1.0 - c.gamma_cbf;
    for (int i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        const double now = distance(i, j, i == 0 ? p.x0 : X[i]);
        const double next = distance(i + 1, j, X[i + 1]);
        if (now > limit && next > limit) continue;
        Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(cols);
        g.segment<2>(3 * (i + 1)) = distance_grad(i + 1, j, X[i + 1]).transpose();
        // x_0 is fixed: the first row reads the measured state, not X[0].
        if (i > 0) g.segment<2>(3 * i) = -keep * distance_grad(i, j, X[i]).transpose();
        add({ConstraintKind::Barrier, i + 1, static_cast<int>(j)}, next - keep * now, std::move(g));
      }
    }
  }

  ConstraintSet out;
  out.rows = std::move(rows);
  out.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.jacobian.resize(static_cast<Eigen::Index>(jac.size()), cols);
  for (std::size_t r = 0; r < jac.size(); ++r) out.jacobian.row(static_cast<Eigen::Index>(r)) = jac[r];
  return out;
}

double trajectory_cost(const MpcProblem& p, std::span<const State> X, std::span<const Control> U) {
  const int N = p.config.horizon;
  double cost = 0.0;
  for (int i = 0; i < N; ++i) {
    const State e = state_error(X[i], p.reference[i]);
    cost += e.dot(p.config.Q * e) + U[i].dot(p.config.R * U[i]);
  }
  const State e = state_error(X[N], p.reference[N]);
  return cost + e.dot(p.config.Q_terminal * e);
}

std::vector<State> rollout(const State& x0, std::span<const Control> U, double dt) {
  std::vector<State> X{x0};
  for (const Control& u : U) X.push_back(step_dynamics(X.back(), u, dt));
  return X;
}

namespace {

struct Defects {
  std::vector<State> d;
  double l1 = 0.0;
  double max = 0.0;
};

Defects defects(const MpcProblem& p, const std::vector<State>& X, const std::vector<Control>& U) {
  Defects out;
  for (int i = 0; i < p.config.horizon; ++i) {
    State d = step_dynamics(X[i], U[i], p.config.dt) - X[i + 1];
    d(2) = wrap_angle(d(2));
    out.l1 += d.lpNorm<1>();
    out.max = std::max(out.max, d.lpNorm<Eigen::Infinity>());
    out.d.push_back(d);
  }
  return out;
}

double merit(const MpcProblem& p, const std::vector<State>& X, const std::vector<Control>& U) {
  const double rho = p.config.slack_penalty;
  const ConstraintSet cs = evaluate_constraints(p, X, false);
  return trajectory_cost(p, X, U) + rho * l1_violation(cs.values) + rho * defects(p, X, U).l1;
}

}  // namespace

MpcSolution shift_solution(const MpcSolution& previous, const State& x0) {
  MpcSolution out;
  const std::size_t n = previous.controls.size();
  if (n == 0 || previous.states.size() != n + 1) throw ConfigError("mpc: cannot shift an empty solution");
  for (std::size_t i = 1; i < n; ++i) out.controls.push_back(previous.controls[i]);
  out.controls.push_back(previous.controls.back());
  for (std::size_t i = 1; i <= n; ++i) out.states.push_back(previous.states[i]);
  out.states.push_back(previous.states.back());
  out.states.front() = x0;
  return out;
}

MpcSolution solve(const MpcProblem& p, const MpcSolution* warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  const MpcConfig& c = p.config;
  const int N = c.horizon;
  const Eigen::Index nu = 2 * N;
  const Control u_max(c.v_max, c.omega_max);

  std::vector<Control> U(static_cast<std::size_t>(N), Control::Zero());
  std::vector<State> X;
  if (warm_start && static_cast<int>(warm_start->controls.size()) == N &&
      static_cast<int>(warm_start->states.size()) == N + 1) {
    for (int i = 0; i < N; ++i) U[i] = warm_start->controls[i].cwiseMax(-u_max).cwiseMin(u_max);
    X = warm_start->states;
    X[0] = p.x0;
  } else {
    X = rollout(p.x0, U, c.dt);
  }

  MpcSolution sol;
  bool converged = false;
  std::vector<Eigen::Matrix3d> A(static_cast<std::size_t>(N));
  std::vector<Eigen::Matrix<double, 3, 2>> B(static_cast<std::size_t>(N));

  for (int it = 1; it <= c.max_iterations && !converged; ++it) {
    sol.iterations = it;
    const Defects def = defects(p, X, U);
    for (int i = 0; i < N; ++i) dynamics_jacobians(X[i], U[i], c.dt, A[i], B[i]);

    // Condensing: dX_i = S_i dU + s_i with dX_0 = 0.
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3 * (N + 1), nu);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(3 * (N + 1));
    for (int i = 0; i < N; ++i) {
      S.middleRows<3>(3 * (i + 1)) = A[i] * S.middleRows<3>(3 * i);
      S.block<3, 2>(3 * (i + 1), 2 * i) += B[i];
      s.segment<3>(3 * (i + 1)) = A[i] * s.segment<3>(3 * i) + def.d[i];
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nu);
    for (int i = 1; i <= N; ++i) {
      const Eigen::Matrix3d& W = i == N ? c.Q_terminal : c.Q;
      const auto Si = S.middleRows<3>(3 * i);
      const State e = state_error(X[i], p.reference[i]) + s.segment<3>(3 * i);
      H.noalias() += 2.0 * Si.transpose() * W * Si;
      g.noalias() += 2.0 * Si.transpose() * (W * e);
    }
    for (int i = 0; i < N; ++i) {
      H.block<2, 2>(2 * i, 2 * i) += 2.0 * c.R;
      g.segment<2>(2 * i) += 2.0 * c.R * U[i];
    }

    const ConstraintSet cs = evaluate_constraints(p, X, true);
    QpProblem qp;
    qp.H = 0.5 * (H + H.transpose());
    qp.g = g;
    qp.lb.resize(nu);
    qp.ub.resize(nu);
    for (int i = 0; i < N; ++i) {
      qp.lb.segment<2>(2 * i) = (-u_max - U[i]).cwiseMin(0.0);
      qp.ub.segment<2>(2 * i) = (u_max - U[i]).cwiseMax(0.0);
    }
    qp.J = cs.jacobian * S;
    qp.c = cs.values + cs.jacobian * s;
    qp.rho = c.slack_penalty;
    const QpResult q = solve_qp(qp);

    const Eigen::VectorXd dU = q.x;
    Eigen::VectorXd pg = g;
    for (Eigen::Index k = 0; k < nu; ++k) {
      if ((qp.lb[k] == 0.0 && pg[k] > 0.0) || (qp.ub[k] == 0.0 && pg[k] < 0.0)) pg[k] = 0.0;
    }

    // Backtracking on the exact-penalty merit; the QP model predicts the decrease.
    const double m0 = merit(p, X, U);
    const double predicted = qp_objective(qp, Eigen::VectorXd::Zero(nu)) - q.objective + c.slack_penalty * def.l1;
    double alpha = 1.0;
    std::vector<State> Xn;
    std::vector<Control> Un;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
      Un = U;
      for (int i = 0; i < N; ++i) Un[i] = (U[i] + alpha * dU.segment<2>(2 * i)).cwiseMax(-u_max).cwiseMin(u_max);
      // Trial states are simulated, so accepted iterates never carry dynamics defects.
      Xn = rollout(p.x0, Un, c.dt);
      if (merit(p, Xn, Un) <= m0 - 1e-4 * alpha * std::max(predicted, 0.0)) {
        accepted = true;
        break;
      }
    }

    SqpTrace tr;
    tr.iteration = it;
    tr.step = dU.size() ? dU.lpNorm<Eigen::Infinity>() : 0.0;
    tr.kkt = pg.size() ? pg.lpNorm<Eigen::Infinity>() : 0.0;
    tr.slack = q.slack;
    tr.merit = m0;
    tr.alpha = accepted ? alpha : 0.0;
    tr.qp_iterations = q.iterations;
    sol.trace.push_back(tr);

    if (accepted) {
      X = std::move(Xn);
      U = std::move(Un);
    }
    converged = tr.step <= c.step_tolerance || predicted <= 1e-10 * (1.0 + std::abs(m0));
    if (!accepted) break;
  }

  // Close remaining defects by simulating the optimized controls.
  sol.controls = U;
  sol.states = rollout(p.x0, U, c.dt);
  sol.cost = trajectory_cost(p, sol.states, sol.controls);
  sol.violation = l1_violation(evaluate_constraints(p, sol.states, false).values);
  sol.max_defect = defects(p, sol.states, sol.controls).max;
  if (sol.violation > c.feasibility_tolerance) {
    sol.status = SolveStatus::InfeasibleRelaxed;
  } else {
    sol.status = converged ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  }
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace rntc
