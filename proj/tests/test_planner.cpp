#include <gtest/gtest.h>

#include "rntc/errors.hpp"
#include "rntc/planner.hpp"

using namespace rntc;

namespace {

PlannerConfig desk_planner(TerminalMode mode) {
  PlannerConfig c;
  c.mpc.mode = mode;
  c.geometry = DatasetGeometry::from_profile(scale_profile(Scale::Desk));
  return c;
}

}  // namespace

TEST(Planner, ReferencePathSampling) {
  const ReferencePath path({0.0, 0.0}, {1.0, 0.0}, 0.05);
  ASSERT_EQ(path.points().size(), 21u);
  EXPECT_NEAR(path.points().back().x(), 1.0, 1e-12);
  EXPECT_EQ(path.heading(), 0.0);
  EXPECT_EQ(path.nearest({0.52, 0.3}), 10u);
  EXPECT_NEAR(path.lateral_deviation({0.52, 0.3}), 0.3, 1e-12);
  EXPECT_NEAR(path.lateral_deviation({-1.0, 0.0}), 1.0, 1e-12);
  const auto h = path.horizon({0.52, 0.3}, 3, 2);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_NEAR(h[0].x(), 0.6, 1e-12);
  EXPECT_NEAR(h[3].x(), 0.75, 1e-12);
  const auto tail = path.horizon({1.0, 0.0}, 3, 10);
  EXPECT_EQ(tail.back().head<2>(), Eigen::Vector2d(1.0, 0.0));
  EXPECT_THROW(ReferencePath({0.0, 0.0}, {1.0, 0.0}, 0.0), ConfigError);
}

TEST(Planner, RntcNeedsResidualModel) {
  EXPECT_THROW(Planner(desk_planner(TerminalMode::Rntc)), ConfigError);
  const ValueModel direct(scale_profile(Scale::Desk), HeadMode::Direct, desk_planner(TerminalMode::Rntc).geometry);
  EXPECT_THROW(Planner(desk_planner(TerminalMode::Rntc), &direct), ConfigError);
}

TEST(Planner, EmptyWorldDrivesTowardGoal) {
  Planner planner(desk_planner(TerminalMode::Sdf));
  const ReferencePath path({0.0, 0.0}, {5.0, 0.0}, 0.05);
  State x(0.0, 0.0, 0.0);
  for (int k = 0; k < 20; ++k) {
    const PlanResult r = planner.plan_step(x, {}, path);
    EXPECT_EQ(r.solution.status, SolveStatus::Optimal);
    x = step_dynamics(x, r.control, 0.1);
  }
  EXPECT_NEAR(x.x(), 0.95, 0.1);
  EXPECT_NEAR(x.y(), 0.0, 1e-6);
}

TEST(Planner, HyperInputShowsTheTerminalTimeAroundTheRobot) {
  const auto cfg = desk_planner(TerminalMode::Rntc);
  ValueModel model(scale_profile(Scale::Desk), HeadMode::Residual, cfg.geometry);
  model.hyper().initialize(1);
  Planner planner(cfg, &model);
  EnvironmentSnapshot s;
  s.obstacles.push_back({{3.0, 2.0}, 0.3, {-1.0, 0.0}});
  const State robot(2.0, 2.0, 0.0);
  const auto input = planner.hyper_input(robot, s);
  const auto& g = cfg.geometry;
  ASSERT_EQ(input.rows(), g.past_steps);
  ASSERT_EQ(input.cols(), g.sdf_size * g.sdf_size);
  const GridSpec spec = GridSpec::covering(robot.head<2>(), g.window_size, g.sdf_size);
  const EnvironmentSnapshot terminal = predict(s, cfg.mpc.horizon * cfg.mpc.dt);
  const int i = 30, j = 26;
  EXPECT_NEAR(input(0, i * g.sdf_size + j) * g.clamp, sdf_eval(terminal, spec.cell_center(i, j), g.inflation, g.clamp),
              1e-5);
  const EnvironmentSnapshot earlier = predict(terminal, -g.past_dt);
  EXPECT_NEAR(input(1, i * g.sdf_size + j) * g.clamp, sdf_eval(earlier, spec.cell_center(i, j), g.inflation, g.clamp),
              1e-5);
}

TEST(Planner, RntcStepReportsPositiveResidual) {
  const auto cfg = desk_planner(TerminalMode::Rntc);
  ValueModel model(scale_profile(Scale::Desk), HeadMode::Residual, cfg.geometry);
  model.hyper().initialize(2);
  Planner planner(cfg, &model);
  const ReferencePath path({0.0, 0.0}, {5.0, 0.0}, 0.05);
  const PlanResult r = planner.plan_step(State::Zero(), {{{2.0, 0.5}, 0.3, {-0.5, 0.0}}}, path);
  EXPECT_GT(r.terminal_residual, 0.0);
  EXPECT_GT(r.theta_norm, 0.0);
  EXPECT_GT(r.wall_time, 0.0);
}
