#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <unsupported/Eigen/AutoDiff>
#include <vector>

#include "rntc/geometry.hpp"
#include "rntc/main_net.hpp"

namespace rntc {

using State = Eigen::Vector3d;    ///< (x, y, theta)
using Control = Eigen::Vector2d;  ///< (v, omega)

/// Continuous unicycle: (v cos theta, v sin theta, omega).
template <typename T>
Eigen::Matrix<T, 3, 1> unicycle(const Eigen::Matrix<T, 3, 1>& x, const Eigen::Matrix<T, 2, 1>& u) {
  using std::cos;
  using std::sin;
  return {u(0) * cos(x(2)), u(0) * sin(x(2)), u(1)};
}

/// One classical RK4 step without heading wrap.
template <typename T>
Eigen::Matrix<T, 3, 1> rk4(const Eigen::Matrix<T, 3, 1>& x, const Eigen::Matrix<T, 2, 1>& u, double dt) {
  const T h(dt);
  const Eigen::Matrix<T, 3, 1> k1 = unicycle<T>(x, u);
  const Eigen::Matrix<T, 3, 1> k2 = unicycle<T>(x + (h / T(2)) * k1, u);
  const Eigen::Matrix<T, 3, 1> k3 = unicycle<T>(x + (h / T(2)) * k2, u);
  const Eigen::Matrix<T, 3, 1> k4 = unicycle<T>(x + h * k3, u);
  return x + (h / T(6)) * (k1 + T(2) * k2 + T(2) * k3 + k4);
}

/// RK4 step with the heading wrapped to (-pi, pi].
State step_dynamics(const State& x, const Control& u, double dt);

/// d(step)/dx and d(step)/du by forward-mode automatic differentiation.
void dynamics_jacobians(const State& x, const Control& u, double dt, Eigen::Matrix3d& A, Eigen::Matrix<double, 3, 2>& B);

/// x - reference with the heading difference wrapped.
State state_error(const State& x, const State& reference);

enum class TerminalMode {
  Rntc,  ///< F_N - R-hat >= 0 at the last stage
  Sdf,   ///< F_N >= 0 at the last stage
  Dcbf,  ///< F_{i+1} >= (1 - gamma) F_i on every stage, no terminal constraint
  None,  ///< no obstacle constraints
};

std::string to_string(TerminalMode mode);
TerminalMode terminal_mode_from_string(const std::string& name);

struct MpcConfig {
  int horizon = 10;
  double dt = 0.1;
  Eigen::Matrix3d Q = Eigen::Vector3d(1.0, 1.0, 0.1).asDiagonal();
  Eigen::Matrix2d R = Eigen::Vector2d(0.1, 0.05).asDiagonal();
  Eigen::Matrix3d Q_terminal = 10.0 * Eigen::Vector3d(1.0, 1.0, 0.1).asDiagonal().toDenseMatrix();
  double v_max = 0.5;
  double omega_max = 0.5;
  TerminalMode mode = TerminalMode::Sdf;
  double slack_penalty = 1e4;
  double gamma_cbf = 0.2;
  int max_iterations = 15;
  /// Converged when the control step falls below this (infinity norm).
  double step_tolerance = 1e-4;
  /// Slack usage above this marks the plan as relaxed.
  double feasibility_tolerance = 1e-4;
  /// Robot radius; obstacle rows use inflation + safety_margin.
  double inflation = kDefaultInflation;
  /// Extra clearance kept by the planner so that trajectories riding a constraint do not graze between samples.
  double safety_margin = 0.05;
  double clamp = kSdfClamp;
  /// Obstacle rows farther than this from the current iterate are left out of the QP.
  double prune_distance = 3.0;

  /// Throws ConfigError on non-symmetric / indefinite weights or bad sizes.
  void validate() const;
};

/// Main network with parameters produced for the terminal time, in world coordinates.
struct ResidualSource {
  const MainNet<double>* net = nullptr;
  Eigen::VectorXd theta;
  StateNormalizer normalizer;

  double value(const State& x) const;
  State gradient(const State& x) const;
};

struct MpcProblem {
  MpcConfig config;
  State x0 = State::Zero();
  /// N + 1 reference states.
  std::vector<State> reference;
  /// Obstacles at the current time.
  EnvironmentSnapshot snapshot;
  /// snapshot extrapolated to each stage (N + 1 entries).
  std::vector<EnvironmentSnapshot> predicted;
  std::optional<ResidualSource> residual;
};

/// Throws ConfigError when the residual is missing in RNTC mode or the reference has the wrong length.
MpcProblem build_problem(const MpcConfig& config, const State& x0, std::vector<State> reference,
                         const EnvironmentSnapshot& snapshot, std::optional<ResidualSource> residual = {});

enum class ConstraintKind { Stage, Terminal, TerminalClamp, Barrier };

struct ConstraintRow {
  ConstraintKind kind;
  int stage;     ///< stage whose state the row depends on (the later one for barrier rows)
  int obstacle;  ///< -1 for the clamp row
};

/// Inequality rows h(X) >= 0 and their Jacobian w.r.t. the stacked states (3 (N + 1) columns).
struct ConstraintSet {
  std::vector<ConstraintRow> rows;
  Eigen::VectorXd values;
  Eigen::MatrixXd jacobian;
};

ConstraintSet evaluate_constraints(const MpcProblem& problem, std::span<const State> states, bool prune = true);

/// Terminal constraint value h_N(x) for the problem's mode (min over obstacles, clamped SDF).
double terminal_value(const MpcProblem& problem, const State& x);

enum class SolveStatus { Optimal, MaxIterations, InfeasibleRelaxed };
std::string to_string(SolveStatus status);

struct SqpTrace {
  int iteration = 0;
  double step = 0.0;      ///< |dU|_inf
  double kkt = 0.0;       ///< projected gradient of the QP model at dU = 0
  double slack = 0.0;     ///< QP slack usage
  double merit = 0.0;
  double alpha = 0.0;
  int qp_iterations = 0;
};

struct MpcSolution {
  std::vector<State> states;
  std::vector<Control> controls;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  double cost = 0.0;
  /// sum of max(0, -h) over all obstacle rows at the returned trajectory.
  double violation = 0.0;
  double max_defect = 0.0;
  double solve_time = 0.0;
  std::vector<SqpTrace> trace;
};

double trajectory_cost(const MpcProblem& problem, std::span<const State> states, std::span<const Control> controls);
std::vector<State> rollout(const State& x0, std::span<const Control> controls, double dt);

/// SQP with Gauss-Newton Hessian; warm_start must have N controls and N + 1 states.
MpcSolution solve(const MpcProblem& problem, const MpcSolution* warm_start = nullptr);

/// Receding-horizon warm start: drop the first stage, repeat the last, pin x0.
MpcSolution shift_solution(const MpcSolution& previous, const State& x0);

}  // namespace rntc
