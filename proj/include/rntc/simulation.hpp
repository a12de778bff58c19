#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rntc/planner.hpp"

namespace rntc {

struct Corridor {
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max{12.0, 8.0};
  bool contains(const Obstacle& o) const;
};

struct ScenarioConfig {
  Corridor corridor;
  State start{1.0, 4.0, 0.0};
  Eigen::Vector2d goal{11.0, 4.0};
  double goal_tolerance = 0.2;
  int obstacle_count = 6;
  double obstacle_radius = 0.3;
  double max_speed = 1.0;
  /// Obstacles are not initialized closer than this to the start position.
  double start_clearance = 1.5;
  double robot_radius = kDefaultInflation;
  double time_limit = 60.0;
};

struct Scenario {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  ScenarioConfig config;
  std::vector<Obstacle> obstacles;
};

std::vector<Scenario> make_scenarios(std::uint64_t seed, int count = 100, const ScenarioConfig& config = {});

/// FNV-1a over the exact bytes of every scenario; recorded in every result file.
std::string scenario_list_hash(const std::vector<Scenario>& scenarios);

struct World {
  double time = 0.0;
  State robot = State::Zero();
  std::vector<Obstacle> obstacles;
};

/// Constant-velocity obstacle motion with mirror reflection at the corridor walls (disks stay inside);
/// the robot is advanced with step_dynamics.
World step_world(const World& world, const Control& u, double dt, const Corridor& corridor);

/// |robot - obstacle| < robot_radius + obstacle radius for some obstacle.
bool in_collision(const State& robot, const std::vector<Obstacle>& obstacles, double robot_radius);

/// Obstacles whose disks reach into the square window centered at the robot.
std::vector<Obstacle> sense(const World& world, double window_size);

enum class Outcome { Success, Collision, Timeout };
std::string to_string(Outcome outcome);

struct EpisodeResult {
  Outcome outcome = Outcome::Timeout;
  double travel_time = 0.0;
  double d_mean = 0.0;
  double d_max = 0.0;
  double opt_time_mean_ms = 0.0;
  double opt_time_std_ms = 0.0;
  int steps = 0;
  int planner_failures = 0;
  int relaxed_plans = 0;
  std::vector<State> trajectory;

  bool success() const { return outcome == Outcome::Success; }
  bool collision() const { return outcome == Outcome::Collision; }
  bool timeout() const { return outcome == Outcome::Timeout; }
};

/// Number of collision checks per control step.
inline constexpr int kCollisionSubsamples = 10;

EpisodeResult run_episode(const Scenario& scenario, const PlannerConfig& planner, const ValueModel* model = nullptr);

struct BenchmarkRow {
  std::uint64_t scenario_id = 0;
  TerminalMode mode = TerminalMode::Sdf;
  int horizon = 0;
  EpisodeResult result;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::string scenario_hash;
};

struct BenchmarkOptions {
  PlannerConfig planner;
  const ValueModel* model = nullptr;
  int workers = 1;
};

/// Every (mode, horizon, scenario) combination; rows ordered by mode, horizon, scenario regardless of workers.
BenchmarkResult run_benchmark(const std::vector<Scenario>& scenarios, const std::vector<TerminalMode>& modes,
                              const std::vector<int>& horizons, const BenchmarkOptions& options,
                              const std::function<void(std::size_t done, std::size_t total)>& progress = {});

struct Aggregate {
  TerminalMode mode;
  int horizon;
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  /// Over successful episodes only; NaN when there are none.
  double travel_time_mean = 0.0;
  double travel_time_std = 0.0;
  double d_mean = 0.0;
  double d_max = 0.0;
  double opt_time_mean_ms = 0.0;
  double opt_time_std_ms = 0.0;
};

std::vector<Aggregate> aggregate(const BenchmarkResult& result);

/// Writes results.csv, summary.csv and the four plot-data files into `dir`.
/// Timing columns hold measured values only when `record_timing` is set ("NA" otherwise), so
/// reruns without it are byte-identical.
void write_benchmark(const std::string& dir, const BenchmarkResult& result, const std::string& config_hash,
                     bool record_timing);

}  // namespace rntc
