#include "rntc/hj.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <vector>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"

namespace rntc {

StateGrid::StateGrid(const Eigen::Vector2d& origin, double size, int nx, int ny, int ntheta)
    : origin_(origin), size_(size), nx_(nx), ny_(ny), ntheta_(ntheta) {
  if (nx < 2 || ny < 2 || ntheta < 1 || !(size > 0.0)) {
    throw ConfigError("state grid needs nx, ny >= 2, ntheta >= 1 and a positive size");
  }
}

double StateGrid::dtheta() const { return 2.0 * std::numbers::pi / ntheta_; }

GridSpec StateGrid::xy_spec() const {
  GridSpec spec;
  spec.origin = origin_;
  spec.nx = nx_;
  spec.ny = ny_;
  spec.spacing = dx();
  return spec;
}

bool StateGrid::interior(int i, int j, double margin) const {
  const double lo_x = origin_.x() + margin, hi_x = origin_.x() + size_ - margin;
  const double lo_y = origin_.y() + margin, hi_y = origin_.y() + size_ - margin;
  return x(i) >= lo_x && x(i) <= hi_x && y(j) >= lo_y && y(j) <= hi_y;
}

bool StateGrid::operator==(const StateGrid& other) const {
  return nx_ == other.nx_ && ny_ == other.ny_ && ntheta_ == other.ntheta_ && size_ == other.size_ &&
         origin_ == other.origin_;
}

double hamiltonian(double theta, const Eigen::Vector3d& grad, const ControlLimits& limits) {
  return limits.v_max * std::abs(grad.x() * std::cos(theta) + grad.y() * std::sin(theta)) +
         limits.omega_max * std::abs(grad.z());
}

double cfl_limit(const StateGrid& grid, const ControlLimits& limits) {
  const double rate = limits.v_max / grid.dx() + limits.v_max / grid.dy() + limits.omega_max / grid.dtheta();
  return 1.0 / rate;
}

Eigen::ArrayXd broadcast_theta(const StateGrid& grid, const Eigen::MatrixXd& failure_xy) {
  if (failure_xy.rows() != grid.nx() || failure_xy.cols() != grid.ny()) {
    throw ConfigError("failure raster does not match the state grid");
  }
  Eigen::ArrayXd out(grid.node_count());
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.ny(); ++j) {
      out.segment(grid.index(i, j, 0), grid.ntheta()).setConstant(failure_xy(i, j));
    }
  }
  return out;
}

ValueGrid backward_step(const ValueGrid& next, const Eigen::MatrixXd& failure_now, double dt,
                        const ControlLimits& limits) {
  const StateGrid& g = next.grid;
  if (dt > cfl_limit(g, limits) * (1.0 + 1e-12)) {
    throw ConfigError("backward_step: time step violates the CFL bound");
  }
  if (failure_now.rows() != g.nx() || failure_now.cols() != g.ny()) {
    throw ConfigError("backward_step: failure raster does not match the state grid");
  }
  const int nx = g.nx(), ny = g.ny(), nt = g.ntheta();
  const double inv_dx = 1.0 / g.dx(), inv_dy = 1.0 / g.dy(), inv_dt = 1.0 / g.dtheta();
  const double ax = limits.v_max, ay = limits.v_max, at = limits.omega_max;

  std::vector<double> c(nt), s(nt);
  for (int k = 0; k < nt; ++k) {
    c[k] = std::cos(g.theta(k));
    s[k] = std::sin(g.theta(k));
  }

  const Eigen::ArrayXd& v = next.values;
  ValueGrid out;
  out.grid = g;
  out.time_label = next.time_label - dt;
  out.values.resize(v.size());

  const Eigen::Index sx = static_cast<Eigen::Index>(ny) * nt;
  const Eigen::Index sy = nt;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double f = failure_now(i, j);
      for (int k = 0; k < nt; ++k) {
        const Eigen::Index idx = g.index(i, j, k);
        const double center = v[idx];

        double px_m, px_p;
        if (i == 0) {
          px_m = px_p = (v[idx + sx] - center) * inv_dx;
        } else if (i == nx - 1) {
          px_m = px_p = (center - v[idx - sx]) * inv_dx;
        } else {
          px_m = (center - v[idx - sx]) * inv_dx;
          px_p = (v[idx + sx] - center) * inv_dx;
        }
        double py_m, py_p;
        if (j == 0) {
          py_m = py_p = (v[idx + sy] - center) * inv_dy;
        } else if (j == ny - 1) {
          py_m = py_p = (center - v[idx - sy]) * inv_dy;
        } else {
          py_m = (center - v[idx - sy]) * inv_dy;
          py_p = (v[idx + sy] - center) * inv_dy;
        }
        const int km = k == 0 ? nt - 1 : k - 1;
        const int kp = k == nt - 1 ? 0 : k + 1;
        const double pt_m = (center - v[idx - k + km]) * inv_dt;
        const double pt_p = (v[idx - k + kp] - center) * inv_dt;

        const double gx = 0.5 * (px_m + px_p);
        const double gy = 0.5 * (py_m + py_p);
        const double gt = 0.5 * (pt_m + pt_p);
        const double h = limits.v_max * std::abs(gx * c[k] + gy * s[k]) + limits.omega_max * std::abs(gt);
        const double dissipation =
            0.5 * (ax * (px_p - px_m) + ay * (py_p - py_m) + at * (pt_p - pt_m));
        out.values[idx] = std::min(f, center + dt * (h + dissipation));
      }
    }
  }
  return out;
}

namespace {

struct InteriorDiff {
  double max_abs = 0.0;
  double flip_fraction = 0.0;
};

InteriorDiff compare_interior(const StateGrid& g, const Eigen::ArrayXd& a, const Eigen::ArrayXd& b,
                              double margin) {
  InteriorDiff out;
  Eigen::Index count = 0, flips = 0;
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) {
      if (!g.interior(i, j, margin)) continue;
      for (int k = 0; k < g.ntheta(); ++k) {
        const Eigen::Index idx = g.index(i, j, k);
        out.max_abs = std::max(out.max_abs, std::abs(a[idx] - b[idx]));
        if ((a[idx] >= 0.0) != (b[idx] >= 0.0)) ++flips;
        ++count;
      }
    }
  }
  out.flip_fraction = count > 0 ? static_cast<double>(flips) / count : 0.0;
  return out;
}

}  // namespace

BrtResult solve_brt(const FailureFunction& failure, const StateGrid& grid, const BrtOptions& options,
                    const ControlLimits& limits) {
  if (!(options.horizon > 0.0)) throw ConfigError("solve_brt: horizon must be positive");
  if (!(options.cfl_fraction > 0.0) || options.cfl_fraction > 1.0) {
    throw ConfigError("solve_brt: cfl_fraction must lie in (0, 1]");
  }
  const double dt_max = options.cfl_fraction * cfl_limit(grid, limits);
  const int per_window = std::max(1, static_cast<int>(std::ceil(options.probe_window / dt_max - 1e-9)));
  int steps = static_cast<int>(std::ceil(options.horizon / (options.probe_window / per_window) - 1e-9));
  steps = std::max(steps, 1);
  const double dt = options.horizon / steps;
  const int probe_start = std::min(steps, std::max(1, static_cast<int>(std::lround(options.probe_window / dt))));

  BrtResult result;
  ValueGrid value{grid, broadcast_theta(grid, failure(options.horizon)), options.horizon};
  ValueGrid probe;
  bool probing = false;
  Eigen::ArrayXd checkpoint = value.values;

  for (int s = 1; s <= steps; ++s) {
    const double t = options.horizon - s * dt;
    const Eigen::MatrixXd f_now = failure(t);
    value = backward_step(value, f_now, dt, limits);
    value.time_label = t;
    ++result.steps;

    if (options.time_invariant) {
      if (s % per_window == 0) {
        const double change = (value.values - checkpoint).abs().maxCoeff();
        checkpoint = value.values;
        if (change < options.tol) {
          value.time_label = 0.0;
          result.converged = true;
          break;
        }
      }
      continue;
    }

    if (probing) {
      probe = backward_step(probe, f_now, dt, limits);
    } else if (s == probe_start) {
      probe = ValueGrid{grid, broadcast_theta(grid, f_now), t};
      probing = true;
    }
  }
  value.time_label = 0.0;

  if (!options.time_invariant) {
    if (probing) {
      const InteriorDiff diff = compare_interior(grid, value.values, probe.values, options.interior_margin);
      result.horizon_change = diff.max_abs;
      result.flip_fraction = diff.flip_fraction;
      result.converged = diff.flip_fraction <= options.flip_tolerance;
    } else {
      result.converged = false;
    }
  }
  result.value = std::move(value);
  return result;
}

FailureFunction snapshot_failure(const EnvironmentSnapshot& snapshot, const StateGrid& grid, double inflation,
                                 double clamp) {
  const GridSpec spec = grid.xy_spec();
  return [snapshot, spec, inflation, clamp](double t) {
    return rasterize(predict(snapshot, t), spec, inflation, clamp).values;
  };
}

Interpolated interpolate(const ValueGrid& value, const Eigen::Vector3d& state) {
  const StateGrid& g = value.grid;
  Interpolated out;

  auto axis = [&out](double coord, int n, int& lo, double& w) {
    if (coord < 0.0) {
      coord = 0.0;
      out.clamped = true;
    } else if (coord > n - 1) {
      coord = n - 1;
      out.clamped = true;
    }
    lo = std::min(static_cast<int>(std::floor(coord)), n - 2);
    w = coord - lo;
  };

  int i0, j0;
  double wx, wy;
  axis((state.x() - g.origin().x()) / g.dx() - 0.5, g.nx(), i0, wx);
  axis((state.y() - g.origin().y()) / g.dy() - 0.5, g.ny(), j0, wy);

  const double two_pi = 2.0 * std::numbers::pi;
  double th = std::fmod(state.z(), two_pi);
  if (th < 0.0) th += two_pi;
  const double ft = th / g.dtheta();
  int k0 = static_cast<int>(std::floor(ft));
  double wt = ft - k0;
  k0 %= g.ntheta();
  const int k1 = (k0 + 1) % g.ntheta();

  const auto& v = value.values;
  auto lerp_theta = [&](int i, int j) {
    return (1.0 - wt) * v[g.index(i, j, k0)] + wt * v[g.index(i, j, k1)];
  };
  const double c00 = lerp_theta(i0, j0), c10 = lerp_theta(i0 + 1, j0);
  const double c01 = lerp_theta(i0, j0 + 1), c11 = lerp_theta(i0 + 1, j0 + 1);
  out.value = (1.0 - wx) * ((1.0 - wy) * c00 + wy * c01) + wx * ((1.0 - wy) * c10 + wy * c11);
  return out;
}

namespace {
constexpr char kGridMagic[8] = {'R', 'N', 'T', 'C', 'V', 'G', 'R', 'D'};
constexpr std::uint32_t kGridVersion = 1;
}  // namespace

void write_value_grid(const std::string& path, const ValueGrid& value, const std::string& config_hash) {
  const StateGrid& g = value.grid;
  if (value.values.size() != g.node_count()) throw ConfigError("value grid: size does not match its grid");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kGridMagic, sizeof(kGridMagic));
  io::write_u32(out, kGridVersion);
  io::write_f64(out, g.origin().x());
  io::write_f64(out, g.origin().y());
  io::write_f64(out, g.size());
  io::write_u32(out, static_cast<std::uint32_t>(g.nx()));
  io::write_u32(out, static_cast<std::uint32_t>(g.ny()));
  io::write_u32(out, static_cast<std::uint32_t>(g.ntheta()));
  io::write_f64(out, value.time_label);
  io::write_string(out, config_hash);
  io::write_u64(out, static_cast<std::uint64_t>(value.values.size()));
  for (Eigen::Index i = 0; i < value.values.size(); ++i) io::write_f64(out, value.values[i]);
  if (!out) throw IoError("failed to write '" + path + "'");
}

ValueGrid read_value_grid(const std::string& path, std::string* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open value grid '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
    throw IoError("'" + path + "' is not a value grid file");
  }
  if (io::read_u32(in) != kGridVersion) throw IoError("value grid: unsupported version");
  Eigen::Vector2d origin;
  origin.x() = io::read_f64(in);
  origin.y() = io::read_f64(in);
  const double size = io::read_f64(in);
  const auto nx = static_cast<int>(io::read_u32(in));
  const auto ny = static_cast<int>(io::read_u32(in));
  const auto nt = static_cast<int>(io::read_u32(in));
  ValueGrid v;
  try {
    v.grid = StateGrid(origin, size, nx, ny, nt);
  } catch (const ConfigError& e) {
    throw IoError(std::string("value grid: corrupt header: ") + e.what());
  }
  v.time_label = io::read_f64(in);
  std::string hash = io::read_string(in, 256);
  if (config_hash) *config_hash = std::move(hash);
  const std::uint64_t count = io::read_u64(in);
  if (count != static_cast<std::uint64_t>(v.grid.node_count())) throw IoError("value grid: corrupt node count");
  v.values.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < v.values.size(); ++i) v.values[i] = io::read_f64(in);
  return v;
}

}  // namespace rntc
