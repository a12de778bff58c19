#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "rntc/errors.hpp"
#include "rntc/mpc.hpp"

using namespace rntc;

namespace {

std::vector<State> straight_reference(int N, double dt, double speed = 0.5) {
  std::vector<State> ref;
  for (int i = 0; i <= N; ++i) ref.emplace_back(speed * dt * (i + 10), 0.0, 0.0);
  return ref;
}

EnvironmentSnapshot moving_obstacles() {
  EnvironmentSnapshot s;
  s.obstacles.push_back({{1.2, 0.1}, 0.3, {-0.4, 0.1}});
  s.obstacles.push_back({{0.4, -0.9}, 0.3, {0.0, 0.5}});
  return s;
}

std::vector<State> wiggly_states(int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<State> x;
  for (int i = 0; i <= N; ++i) x.emplace_back(0.12 * i + u(rng), u(rng), u(rng));
  return x;
}

}  // namespace

TEST(Mpc, Rk4MatchesFineEulerIntegration) {
  const State x0(0.3, -0.2, 0.4);
  const Control u(0.5, 0.3);
  State fine = x0;
  for (int k = 0; k < 100000; ++k) fine += 1e-6 * unicycle<double>(fine, u);
  EXPECT_LE((rk4<double>(x0, u, 0.1) - fine).norm(), 1e-6);
  const State w = step_dynamics(State(0.0, 0.0, 3.1), Control(0.0, 0.5), 0.2);
  EXPECT_NEAR(w.z(), 3.2 - 2.0 * std::numbers::pi, 1e-12);
}

TEST(Mpc, DynamicsJacobiansMatchFiniteDifferences) {
  const State x(0.3, -0.2, 0.9);
  const Control u(0.4, -0.3);
  Eigen::Matrix3d A;
  Eigen::Matrix<double, 3, 2> B;
  dynamics_jacobians(x, u, 0.1, A, B);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    State e = State::Zero();
    e[i] = h;
    const State fd = (rk4<double>(x + e, u, 0.1) - rk4<double>(x - e, u, 0.1)) / (2 * h);
    EXPECT_LE((A.col(i) - fd).norm(), 1e-8);
  }
  for (int i = 0; i < 2; ++i) {
    Control e = Control::Zero();
    e[i] = h;
    const State fd = (rk4<double>(x, u + e, 0.1) - rk4<double>(x, u - e, 0.1)) / (2 * h);
    EXPECT_LE((B.col(i) - fd).norm(), 1e-8);
  }
}

TEST(Mpc, StateErrorWrapsHeading) {
  const State e = state_error(State(1.0, 2.0, 3.1), State(0.0, 0.0, -3.1));
  EXPECT_NEAR(e.z(), 6.2 - 2.0 * std::numbers::pi, 1e-12);
}

TEST(Mpc, ModeNames) {
  for (TerminalMode m : {TerminalMode::Rntc, TerminalMode::Sdf, TerminalMode::Dcbf, TerminalMode::None}) {
    EXPECT_EQ(terminal_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(terminal_mode_from_string("vo"), ConfigError);
}

TEST(Mpc, ConfigValidation) {
  MpcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.horizon = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.Q(0, 0) = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.safety_margin = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Mpc, RntcNeedsResidual) {
  MpcConfig c;
  c.mode = TerminalMode::Rntc;
  EXPECT_THROW(build_problem(c, State::Zero(), straight_reference(c.horizon, c.dt), {}), ConfigError);
  c.mode = TerminalMode::Sdf;
  EXPECT_THROW(build_problem(c, State::Zero(), straight_reference(3, c.dt), {}), ConfigError);
}

TEST(Mpc, ConstraintJacobiansMatchFiniteDifferences) {
  const MainNet<double> net(MainNetSpec::desk(), HeadMode::Residual);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(0.0, 0.4);
  ResidualSource residual{&net, Eigen::VectorXd(net.parameter_count()), StateNormalizer{{0.5, 0.0}, 8.0}};
  for (auto& v : residual.theta) v = d(rng);

  for (TerminalMode mode : {TerminalMode::Sdf, TerminalMode::Rntc, TerminalMode::Dcbf}) {
    MpcConfig c;
    c.horizon = 6;
    c.mode = mode;
    const MpcProblem p = build_problem(c, State::Zero(), straight_reference(c.horizon, c.dt), moving_obstacles(),
                                       mode == TerminalMode::Rntc ? std::optional(residual) : std::nullopt);
    std::vector<State> x = wiggly_states(c.horizon, 2);
    const ConstraintSet cs = evaluate_constraints(p, x, false);
    ASSERT_GT(cs.rows.size(), 0u);
    ASSERT_EQ(cs.jacobian.cols(), 3 * (c.horizon + 1));
    const double h = 1e-6;
    for (int col = 0; col < cs.jacobian.cols(); ++col) {
      std::vector<State> xp = x, xm = x;
      xp[col / 3][col % 3] += h;
      xm[col / 3][col % 3] -= h;
      const Eigen::VectorXd fd =
          (evaluate_constraints(p, xp, false).values - evaluate_constraints(p, xm, false).values) / (2 * h);
      for (Eigen::Index r = 0; r < fd.size(); ++r) {
        const double scale = std::max(1.0, std::abs(fd[r]));
        EXPECT_LE(std::abs(cs.jacobian(r, col) - fd[r]) / scale, 1e-5) << to_string(mode) << " row " << r;
      }
    }
  }
}

TEST(Mpc, RowLayoutPerMode) {
  MpcConfig c;
  c.horizon = 5;
  const EnvironmentSnapshot obs = moving_obstacles();
  const auto x = wiggly_states(5, 1);
  auto count = [&](TerminalMode mode, ConstraintKind kind) {
    MpcConfig cc = c;
    cc.mode = mode;
    const MainNet<double> net(MainNetSpec::desk(), HeadMode::Residual);
    ResidualSource res{&net, Eigen::VectorXd::Zero(net.parameter_count()), {}};
    const MpcProblem p = build_problem(cc, State::Zero(), straight_reference(5, c.dt), obs,
                                       mode == TerminalMode::Rntc ? std::optional(res) : std::nullopt);
    const ConstraintSet cs = evaluate_constraints(p, x, false);
    return std::count_if(cs.rows.begin(), cs.rows.end(), [&](const ConstraintRow& r) { return r.kind == kind; });
  };
  EXPECT_EQ(count(TerminalMode::Sdf, ConstraintKind::Stage), 4 * 2);
  EXPECT_EQ(count(TerminalMode::Sdf, ConstraintKind::Terminal), 2);
  EXPECT_EQ(count(TerminalMode::Rntc, ConstraintKind::Stage), 4 * 2);
  EXPECT_EQ(count(TerminalMode::Rntc, ConstraintKind::Terminal), 2);
  EXPECT_EQ(count(TerminalMode::Rntc, ConstraintKind::TerminalClamp), 1);
  EXPECT_EQ(count(TerminalMode::Dcbf, ConstraintKind::Barrier), 5 * 2);
  EXPECT_EQ(count(TerminalMode::None, ConstraintKind::Stage), 0);
}

TEST(Mpc, FreeSpaceTrackingRespectsLimitsAndDynamics) {
  MpcConfig c;
  c.mode = TerminalMode::None;
  const MpcProblem p = build_problem(c, State(0.0, 0.3, 0.2), straight_reference(c.horizon, c.dt), {});
  const MpcSolution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_LE(s.max_defect, 1e-9);
  ASSERT_EQ(s.controls.size(), static_cast<std::size_t>(c.horizon));
  for (const Control& u : s.controls) {
    EXPECT_LE(std::abs(u.x()), c.v_max + 1e-9);
    EXPECT_LE(std::abs(u.y()), c.omega_max + 1e-9);
  }
  EXPECT_GT(s.controls[0].x(), 0.3);
  const auto r = rollout(p.x0, s.controls, c.dt);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_LE((r[i] - s.states[i]).norm(), 1e-9);
  EXPECT_NEAR(s.cost, trajectory_cost(p, s.states, s.controls), 1e-9);
}

TEST(Mpc, SdfConstraintKeepsClearOfStaticObstacle) {
  MpcConfig c;
  c.mode = TerminalMode::Sdf;
  EnvironmentSnapshot obs;
  obs.obstacles.push_back({{0.8, 0.0}, 0.3, {}});
  const MpcProblem p = build_problem(c, State::Zero(), straight_reference(c.horizon, c.dt), obs);
  const MpcSolution s = solve(p);
  EXPECT_LE(s.violation, 1e-6);
  for (std::size_t i = 1; i < s.states.size(); ++i) {
    EXPECT_GE(obstacle_distance(obs.obstacles[0], s.states[i].head<2>(), c.inflation + c.safety_margin), -1e-6);
  }
}

TEST(Mpc, WarmStartShiftKeepsLengths) {
  MpcConfig c;
  c.mode = TerminalMode::None;
  const MpcProblem p = build_problem(c, State::Zero(), straight_reference(c.horizon, c.dt), {});
  const MpcSolution s = solve(p);
  const MpcSolution w = shift_solution(s, s.states[1]);
  ASSERT_EQ(w.controls.size(), s.controls.size());
  ASSERT_EQ(w.states.size(), s.states.size());
  EXPECT_EQ(w.states[0], s.states[1]);
  EXPECT_EQ(w.controls.back(), s.controls.back());
  const MpcSolution again = solve(p, &w);
  EXPECT_LE(again.max_defect, 1e-9);
}
