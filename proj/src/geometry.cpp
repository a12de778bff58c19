#include "rntc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rntc/errors.hpp"

namespace rntc {

GridSpec GridSpec::covering(const Eigen::Vector2d& center, double size, int n) {
  GridSpec spec;
  spec.nx = n;
  spec.ny = n;
  spec.spacing = n > 0 ? size / n : 0.0;
  spec.origin = center - Eigen::Vector2d::Constant(0.5 * size);
  return spec;
}

void GridSpec::validate() const {
  if (nx <= 0 || ny <= 0 || !(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ConfigError("grid spec needs positive resolution (nx, ny, spacing)");
  }
}

double obstacle_distance(const Obstacle& obstacle, const Eigen::Vector2d& point, double inflation) {
  return (point - obstacle.center).norm() - obstacle.radius - inflation;
}

Eigen::Vector2d obstacle_distance_gradient(const Obstacle& obstacle, const Eigen::Vector2d& point) {
  const Eigen::Vector2d d = point - obstacle.center;
  const double n = d.norm();
  if (n == 0.0) return Eigen::Vector2d::UnitX();
  return d / n;
}

double sdf_eval(const EnvironmentSnapshot& snapshot, const Eigen::Vector2d& point, double inflation,
                double clamp) {
  double value = clamp;
  for (const auto& obstacle : snapshot.obstacles) {
    value = std::min(value, obstacle_distance(obstacle, point, inflation));
  }
  return std::clamp(value, -clamp, clamp);
}

EnvironmentSnapshot predict(const EnvironmentSnapshot& snapshot, double dt) {
  EnvironmentSnapshot out = snapshot;
  for (auto& obstacle : out.obstacles) obstacle.center += obstacle.velocity * dt;
  out.timestamp += dt;
  return out;
}

SdfGrid rasterize(const EnvironmentSnapshot& snapshot, const GridSpec& spec, double inflation,
                  double clamp) {
  spec.validate();
  SdfGrid grid;
  grid.values.resize(spec.nx, spec.ny);
  grid.origin = spec.origin;
  grid.spacing = spec.spacing;
  grid.timestamp = snapshot.timestamp;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      grid.values(i, j) = sdf_eval(snapshot, spec.cell_center(i, j), inflation, clamp);
    }
  }
  return grid;
}

std::vector<SdfGrid> sdf_sequence(const EnvironmentSnapshot& snapshot, const GridSpec& spec, int steps,
                                  double dt, double inflation, double clamp) {
  if (steps < 1) throw ConfigError("sdf_sequence needs at least one step");
  std::vector<SdfGrid> out;
  out.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    out.push_back(rasterize(predict(snapshot, s * dt), spec, inflation, clamp));
  }
  return out;
}

}  // namespace rntc
