#pragma once

#include <Eigen/Core>
#include <vector>

namespace rntc {

/// Upper/lower clamp applied to every signed distance value.
inline constexpr double kSdfClamp = 10.0;
/// Robot footprint radius used as obstacle inflation.
inline constexpr double kDefaultInflation = 0.3;
/// Side length of the square sensing window.
inline constexpr double kWindowSize = 8.0;

/// Disk obstacle moving with constant velocity.
struct Obstacle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.3;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

/// Obstacles observed inside a square window around the robot at one instant.
struct EnvironmentSnapshot {
  std::vector<Obstacle> obstacles;
  Eigen::Vector2d window_center = Eigen::Vector2d::Zero();
  double window_size = kWindowSize;
  double timestamp = 0.0;
};

/// Regular 2-D lattice sampled at cell centers; `origin` is the lower-left corner.
struct GridSpec {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double spacing = 0.0;
  int nx = 0;
  int ny = 0;

  /// n x n cells covering the square of side `size` centered at `center`.
  static GridSpec covering(const Eigen::Vector2d& center, double size, int n);

  Eigen::Vector2d cell_center(int i, int j) const {
    return origin + spacing * Eigen::Vector2d(i + 0.5, j + 0.5);
  }
  /// Throws ConfigError when the resolution is not positive.
  void validate() const;
};

/// Rasterized failure function; values(i, j) is the SDF at cell_center(i, j).
struct SdfGrid {
  Eigen::MatrixXd values;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double spacing = 0.0;
  double timestamp = 0.0;
};

/// Signed distance from `point` to one inflated disk, unclamped.
double obstacle_distance(const Obstacle& obstacle, const Eigen::Vector2d& point, double inflation);

/// Gradient of obstacle_distance w.r.t. the point. At the disk center the
/// direction is undefined and (1, 0) is returned.
Eigen::Vector2d obstacle_distance_gradient(const Obstacle& obstacle, const Eigen::Vector2d& point);

/// min_j (|p - c_j| - r_j - inflation) clamped to [-clamp, clamp]; +clamp when empty.
double sdf_eval(const EnvironmentSnapshot& snapshot, const Eigen::Vector2d& point,
                double inflation = kDefaultInflation, double clamp = kSdfClamp);

/// Constant-velocity extrapolation by dt (negative dt extrapolates into the past).
EnvironmentSnapshot predict(const EnvironmentSnapshot& snapshot, double dt);

SdfGrid rasterize(const EnvironmentSnapshot& snapshot, const GridSpec& spec,
                  double inflation = kDefaultInflation, double clamp = kSdfClamp);

/// Grids at t, t + dt, ..., t + (steps - 1) dt.
std::vector<SdfGrid> sdf_sequence(const EnvironmentSnapshot& snapshot, const GridSpec& spec,
                                  int steps, double dt, double inflation = kDefaultInflation,
                                  double clamp = kSdfClamp);

}  // namespace rntc
