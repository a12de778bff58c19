#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

#include "rntc/geometry.hpp"

namespace rntc {

/// Symmetric unicycle control box: v in [-v_max, v_max], omega in [-omega_max, omega_max].
struct ControlLimits {
  double v_max = 0.5;
  double omega_max = 0.5;
};

/// Cell-centered (x, y) lattice over a square window times a periodic heading axis.
/// Heading nodes sit at k * 2 pi / ntheta.
class StateGrid {
 public:
  StateGrid() = default;
  StateGrid(const Eigen::Vector2d& origin, double size, int nx, int ny, int ntheta);

  static StateGrid centered(const Eigen::Vector2d& center, double size, int nx, int ny, int ntheta) {
    return {center - Eigen::Vector2d::Constant(0.5 * size), size, nx, ny, ntheta};
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ntheta() const { return ntheta_; }
  double size() const { return size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  double dx() const { return size_ / nx_; }
  double dy() const { return size_ / ny_; }
  double dtheta() const;

  double x(int i) const { return origin_.x() + (i + 0.5) * dx(); }
  double y(int j) const { return origin_.y() + (j + 0.5) * dy(); }
  double theta(int k) const { return k * dtheta(); }

  Eigen::Index index(int i, int j, int k) const {
    return (static_cast<Eigen::Index>(i) * ny_ + j) * ntheta_ + k;
  }
  Eigen::Index node_count() const { return static_cast<Eigen::Index>(nx_) * ny_ * ntheta_; }

  /// The matching (x, y) raster.
  GridSpec xy_spec() const;

  /// True when node (i, j) lies at least `margin` meters inside the window edges.
  bool interior(int i, int j, double margin) const;

  bool operator==(const StateGrid& other) const;

 private:
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  double size_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  int ntheta_ = 0;
};

/// Value function sampled on a StateGrid (theta fastest, then y, then x).
struct ValueGrid {
  StateGrid grid;
  Eigen::ArrayXd values;
  double time_label = 0.0;
};

/// Failure values F over the (x, y) raster at absolute time t; shape nx x ny.
using FailureFunction = std::function<Eigen::MatrixXd(double)>;

/// max over the control box of grad . f(theta, u), in closed form.
double hamiltonian(double theta, const Eigen::Vector3d& grad, const ControlLimits& limits = {});

/// Largest stable explicit step for global Lax-Friedrichs: 1 / sum(alpha_i / dx_i).
double cfl_limit(const StateGrid& grid, const ControlLimits& limits = {});

/// One explicit Euler step backward in time, followed by the min-clamp against `failure_now`.
/// Throws ConfigError when dt exceeds the CFL limit.
ValueGrid backward_step(const ValueGrid& next, const Eigen::MatrixXd& failure_now, double dt,
                        const ControlLimits& limits = {});

struct BrtOptions {
  double horizon = 4.0;
  /// Per-0.1 s max-norm change below which a time-invariant problem is stationary.
  double tol = 1e-3;
  double cfl_fraction = 0.5;
  /// Horizon-sensitivity probe: V(., 0) is also computed with horizon - probe_window.
  double probe_window = 0.1;
  /// Allowed fraction of interior nodes whose safe/unsafe label differs between the two horizons.
  double flip_tolerance = 1e-3;
  double interior_margin = 0.5;
  /// Failure values do not depend on time (enables early exit).
  bool time_invariant = false;
};

struct BrtResult {
  ValueGrid value;
  bool converged = false;
  /// Max-norm difference between horizon and horizon - probe_window solutions (interior nodes).
  double horizon_change = 0.0;
  double flip_fraction = 0.0;
  int steps = 0;
};

/// Integrates the HJB variational inequality from V(., horizon) = F(., horizon) back to t = 0.
BrtResult solve_brt(const FailureFunction& failure, const StateGrid& grid, const BrtOptions& options = {},
                    const ControlLimits& limits = {});

/// Failure function of a snapshot under constant-velocity extrapolation; t is relative to its timestamp.
FailureFunction snapshot_failure(const EnvironmentSnapshot& snapshot, const StateGrid& grid,
                                 double inflation = kDefaultInflation, double clamp = kSdfClamp);

struct Interpolated {
  double value = 0.0;
  /// (x, y) fell outside the node range and was clamped.
  bool clamped = false;
};

/// Trilinear interpolation, periodic in theta.
Interpolated interpolate(const ValueGrid& value, const Eigen::Vector3d& state);

/// Broadcasts an nx x ny failure raster over theta.
Eigen::ArrayXd broadcast_theta(const StateGrid& grid, const Eigen::MatrixXd& failure_xy);

/// Binary value-grid file: grid, time label, config hash, float64 values. Throws IoError.
void write_value_grid(const std::string& path, const ValueGrid& value, const std::string& config_hash = "");
ValueGrid read_value_grid(const std::string& path, std::string* config_hash = nullptr);

}  // namespace rntc
