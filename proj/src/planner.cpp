#include "rntc/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rntc/errors.hpp"

namespace rntc {

ReferencePath::ReferencePath(const Eigen::Vector2d& start, const Eigen::Vector2d& goal, double spacing)
    : start_(start), goal_(goal) {
  if (!(spacing > 0.0)) throw ConfigError("reference path spacing must be positive");
  const Eigen::Vector2d delta = goal - start;
  const double length = delta.norm();
  heading_ = length > 0.0 ? std::atan2(delta.y(), delta.x()) : 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(length / spacing));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = steps == 0 ? 1.0 : std::min(1.0, static_cast<double>(k) * spacing / length);
    points_.push_back(start + t * delta);
  }
}

std::size_t ReferencePath::nearest(const Eigen::Vector2d& position) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points_.size(); ++k) {
    const double d = (points_[k] - position).squaredNorm();
    if (d < best_d) best_d = d, best = k;
  }
  return best;
}

double ReferencePath::lateral_deviation(const Eigen::Vector2d& position) const {
  const Eigen::Vector2d delta = goal_ - start_;
  const double len2 = delta.squaredNorm();
  if (len2 == 0.0) return (position - start_).norm();
  const double t = std::clamp((position - start_).dot(delta) / len2, 0.0, 1.0);
  return (position - (start_ + t * delta)).norm();
}

std::vector<State> ReferencePath::horizon(const Eigen::Vector2d& position, int N, int lead) const {
  const std::size_t base = nearest(position) + static_cast<std::size_t>(std::max(lead, 0));
  std::vector<State> out;
  for (int i = 0; i <= N; ++i) {
    const Eigen::Vector2d& q = points_[std::min(base + static_cast<std::size_t>(i), points_.size() - 1)];
    out.emplace_back(q.x(), q.y(), heading_);
  }
  return out;
}

Planner::Planner(PlannerConfig config, const ValueModel* model) : config_(std::move(config)), model_(model) {
  config_.mpc.validate();
  if (config_.mpc.mode == TerminalMode::Rntc) {
    if (model_ == nullptr) throw ConfigError("planner: RNTC mode requires a trained model");
    if (model_->mode() != HeadMode::Residual) throw ConfigError("planner: RNTC mode requires a residual-head checkpoint");
    config_.geometry = model_->geometry();
  }
}

ValueModel::Tensor Planner::hyper_input(const State& robot, const EnvironmentSnapshot& snapshot) const {
  const DatasetGeometry& g = config_.geometry;
  const GridSpec spec = GridSpec::covering(robot.head<2>(), g.window_size, g.sdf_size);
  const EnvironmentSnapshot terminal = predict(snapshot, config_.mpc.horizon * config_.mpc.dt);
  return model_->input_from_payload(sdf_stack(terminal, spec, g.past_steps, g.past_dt, g.inflation, g.clamp));
}

PlanResult Planner::plan_step(const State& robot, const std::vector<Obstacle>& tracked, const ReferencePath& path) {
  const auto t0 = std::chrono::steady_clock::now();
  const MpcConfig& mc = config_.mpc;
  EnvironmentSnapshot snapshot;
  snapshot.obstacles = tracked;
  snapshot.window_center = robot.head<2>();
  snapshot.window_size = config_.geometry.window_size;

  PlanResult result;
  std::optional<ResidualSource> residual;
  if (mc.mode == TerminalMode::Rntc) {
    ResidualSource src;
    src.net = &model_->main();
    src.theta = model_->parameters_for(hyper_input(robot, snapshot));
    src.normalizer = StateNormalizer{robot.head<2>(), config_.geometry.window_size};
    result.theta_norm = src.theta.norm();
    residual = std::move(src);
  }

  const MpcProblem problem =
      build_problem(mc, robot, path.horizon(robot.head<2>(), mc.horizon, config_.lead_steps), snapshot, residual);
  std::optional<MpcSolution> warm;
  if (previous_) warm = shift_solution(*previous_, robot);
  result.solution = solve(problem, warm ? &*warm : nullptr);
  result.control = result.solution.controls.front();
  if (residual) result.terminal_residual = residual->value(result.solution.states.back());
  previous_ = result.solution;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace rntc
