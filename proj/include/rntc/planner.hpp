#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "rntc/dataset.hpp"
#include "rntc/model.hpp"
#include "rntc/mpc.hpp"

namespace rntc {

/// Straight segment start -> goal sampled every `spacing` meters.
class ReferencePath {
 public:
  ReferencePath(const Eigen::Vector2d& start, const Eigen::Vector2d& goal, double spacing);

  const std::vector<Eigen::Vector2d>& points() const { return points_; }
  double heading() const { return heading_; }
  const Eigen::Vector2d& goal() const { return goal_; }

  std::size_t nearest(const Eigen::Vector2d& position) const;
  /// Distance from `position` to the segment.
  double lateral_deviation(const Eigen::Vector2d& position) const;
  /// N + 1 reference states starting `lead` samples ahead of the closest point.
  std::vector<State> horizon(const Eigen::Vector2d& position, int N, int lead) const;

 private:
  Eigen::Vector2d start_;
  Eigen::Vector2d goal_;
  double heading_ = 0.0;
  std::vector<Eigen::Vector2d> points_;
};

struct PlannerConfig {
  MpcConfig mpc;
  /// Reference samples skipped ahead of the closest path point.
  int lead_steps = 10;
  /// Raster and timing used to build the hypernetwork input.
  DatasetGeometry geometry;
};

struct PlanResult {
  Control control = Control::Zero();
  MpcSolution solution;
  /// |Theta|_2 of the generated main-network parameters (RNTC only).
  double theta_norm = 0.0;
  /// R-hat at the planned terminal state (RNTC only).
  double terminal_residual = 0.0;
  /// Wall time of the full step (hypernetwork + problem build + solve), seconds.
  double wall_time = 0.0;
};

/// Receding-horizon planner; keeps the previous solution for warm starts.
class Planner {
 public:
  /// `model` must outlive the planner and is required (residual head) in RNTC mode.
  Planner(PlannerConfig config, const ValueModel* model = nullptr);

  const PlannerConfig& config() const { return config_; }
  void reset() { previous_.reset(); }

  /// Hypernetwork input for the terminal time: rasters at t + N dt and t + N dt - past_dt,
  /// over the window centered at the robot.
  ValueModel::Tensor hyper_input(const State& robot, const EnvironmentSnapshot& snapshot) const;

  PlanResult plan_step(const State& robot, const std::vector<Obstacle>& tracked, const ReferencePath& path);

 private:
  PlannerConfig config_;
  const ValueModel* model_;
  std::optional<MpcSolution> previous_;
};

}  // namespace rntc
