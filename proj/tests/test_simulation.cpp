#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "rntc/errors.hpp"
#include "rntc/simulation.hpp"

using namespace rntc;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PlannerConfig desk_planner(TerminalMode mode) {
  PlannerConfig c;
  c.mpc.mode = mode;
  c.geometry = DatasetGeometry::from_profile(scale_profile(Scale::Desk));
  return c;
}

}  // namespace

TEST(Simulation, ScenariosAreSeededAndRespectTheCorridor) {
  const auto a = make_scenarios(4, 20);
  const auto b = make_scenarios(4, 20);
  const auto c = make_scenarios(5, 20);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(scenario_list_hash(a), scenario_list_hash(b));
  EXPECT_NE(scenario_list_hash(a), scenario_list_hash(c));
  for (const auto& s : a) {
    ASSERT_EQ(static_cast<int>(s.obstacles.size()), s.config.obstacle_count);
    for (const auto& o : s.obstacles) {
      EXPECT_TRUE(s.config.corridor.contains(o));
      EXPECT_LE(o.velocity.norm(), s.config.max_speed + 1e-12);
      EXPECT_GE((o.center - s.config.start.head<2>()).norm(), s.config.start_clearance - 1e-12);
    }
  }
}

TEST(Simulation, ObstaclesBounceOffTheWalls) {
  Corridor corridor;
  World w;
  w.robot = State(1.0, 4.0, 0.0);
  w.obstacles.push_back({{11.6, 4.0}, 0.3, {1.0, 0.0}});
  for (int k = 0; k < 5; ++k) w = step_world(w, Control::Zero(), 0.1, corridor);
  EXPECT_LT(w.obstacles[0].velocity.x(), 0.0);
  EXPECT_TRUE(corridor.contains(w.obstacles[0]));
  EXPECT_NEAR(w.time, 0.5, 1e-12);
  EXPECT_EQ(w.robot, State(1.0, 4.0, 0.0));
}

TEST(Simulation, CollisionAndSensing) {
  const std::vector<Obstacle> obs = {{{1.0, 0.0}, 0.3, {}}};
  EXPECT_TRUE(in_collision(State(0.5, 0.0, 0.0), obs, 0.3));
  EXPECT_FALSE(in_collision(State(0.3, 0.0, 0.0), obs, 0.3));
  World w;
  w.obstacles = {{{3.9, 0.0}, 0.3, {}}, {{4.5, 0.0}, 0.3, {}}};
  EXPECT_EQ(sense(w, 8.0).size(), 1u);
}

TEST(Simulation, OutcomeNames) {
  EXPECT_EQ(to_string(Outcome::Success), "success");
  EXPECT_EQ(to_string(Outcome::Collision), "collision");
  EXPECT_EQ(to_string(Outcome::Timeout), "timeout");
}

TEST(Simulation, EmptyCorridorEpisodeSucceeds) {
  Scenario s;
  s.config.obstacle_count = 0;
  const EpisodeResult r = run_episode(s, desk_planner(TerminalMode::Sdf));
  EXPECT_TRUE(r.success());
  // 10 m at 0.5 m/s needs at least 20 s.
  EXPECT_GE(r.travel_time, 19.5);
  EXPECT_LE(r.travel_time, 30.0);
  EXPECT_LE(r.d_max, 0.05);
  EXPECT_EQ(r.planner_failures, 0);
}

TEST(Simulation, HeadOnObstacleWithoutConstraintsCollides) {
  Scenario s;
  s.config.obstacle_count = 1;
  s.obstacles.push_back({{6.0, 4.0}, 0.3, {-0.5, 0.0}});
  EXPECT_TRUE(run_episode(s, desk_planner(TerminalMode::None)).collision());
}

TEST(Simulation, BenchmarkOutputIsByteStableAcrossWorkers) {
  const auto scenarios = make_scenarios(11, 4);
  BenchmarkOptions opt;
  opt.planner = desk_planner(TerminalMode::Sdf);
  const auto a = run_benchmark(scenarios, {TerminalMode::Sdf, TerminalMode::Dcbf}, {5}, opt);
  opt.workers = 2;
  const auto b = run_benchmark(scenarios, {TerminalMode::Sdf, TerminalMode::Dcbf}, {5}, opt);
  ASSERT_EQ(a.rows.size(), 8u);
  EXPECT_EQ(a.scenario_hash, scenario_list_hash(scenarios));
  const auto dir = std::filesystem::temp_directory_path();
  const auto da = dir / "rntc_test_bench_a", db = dir / "rntc_test_bench_b";
  write_benchmark(da.string(), a, "abc", false);
  write_benchmark(db.string(), b, "abc", false);
  for (const char* f : {"results.csv", "summary.csv", "success_vs_horizon.csv", "opt_time_vs_horizon.csv",
                        "travel_time_vs_horizon.csv", "pareto.csv"}) {
    const std::string ta = slurp(da / f);
    EXPECT_FALSE(ta.empty()) << f;
    EXPECT_EQ(ta, slurp(db / f)) << f;
    EXPECT_NE(ta.find(a.scenario_hash), std::string::npos) << f;
  }
  EXPECT_NE(slurp(da / "opt_time_vs_horizon.csv").find("NA"), std::string::npos);

  const auto agg = aggregate(a);
  ASSERT_EQ(agg.size(), 2u);
  for (const auto& g : agg) {
    EXPECT_EQ(g.episodes, 4);
    EXPECT_NEAR(g.success_rate + g.collision_rate + g.timeout_rate, 1.0, 1e-12);
  }
  std::filesystem::remove_all(da);
  std::filesystem::remove_all(db);
}
