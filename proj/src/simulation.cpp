#include "rntc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"

namespace rntc {

bool Corridor::contains(const Obstacle& o) const {
  return o.center.x() >= min.x() + o.radius && o.center.x() <= max.x() - o.radius &&
         o.center.y() >= min.y() + o.radius && o.center.y() <= max.y() - o.radius;
}

std::vector<Scenario> make_scenarios(std::uint64_t seed, int count, const ScenarioConfig& config) {
  if (count < 1) throw ConfigError("make_scenarios: count must be >= 1");
  const Corridor& c = config.corridor;
  const double r = config.obstacle_radius;
  if (c.max.x() - c.min.x() <= 2 * r || c.max.y() - c.min.y() <= 2 * r) {
    throw ConfigError("make_scenarios: corridor too small for the obstacles");
  }
  std::vector<Scenario> out;
  for (int k = 0; k < count; ++k) {
    Scenario s;
    s.id = static_cast<std::uint64_t>(k);
    s.seed = io::mix_seed(seed, s.id, 0x5ce9);
    s.config = config;
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> ux(c.min.x() + r, c.max.x() - r);
    std::uniform_real_distribution<double> uy(c.min.y() + r, c.max.y() - r);
    std::uniform_real_distribution<double> speed(0.0, config.max_speed);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    while (static_cast<int>(s.obstacles.size()) < config.obstacle_count) {
      Obstacle o;
      o.radius = r;
      o.center = {ux(rng), uy(rng)};
      const double v = speed(rng);
      const double h = heading(rng);
      o.velocity = {v * std::cos(h), v * std::sin(h)};
      if ((o.center - config.start.head<2>()).norm() < config.start_clearance) continue;
      s.obstacles.push_back(o);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string scenario_list_hash(const std::vector<Scenario>& scenarios) {
  std::string bytes;
  auto put = [&](double v) {
    char b[8];
    std::memcpy(b, &v, 8);
    bytes.append(b, 8);
  };
  for (const auto& s : scenarios) {
    put(static_cast<double>(s.id));
    put(s.config.start.x());
    put(s.config.start.y());
    put(s.config.start.z());
    put(s.config.goal.x());
    put(s.config.goal.y());
    put(s.config.goal_tolerance);
    put(s.config.time_limit);
    put(s.config.robot_radius);
    put(s.config.corridor.min.x());
    put(s.config.corridor.min.y());
    put(s.config.corridor.max.x());
    put(s.config.corridor.max.y());
    for (const auto& o : s.obstacles) {
      put(o.center.x());
      put(o.center.y());
      put(o.radius);
      put(o.velocity.x());
      put(o.velocity.y());
    }
  }
  return io::hex64(io::fnv1a(bytes));
}

World step_world(const World& world, const Control& u, double dt, const Corridor& corridor) {
  World next = world;
  next.time += dt;
  next.robot = step_dynamics(world.robot, u, dt);
  for (auto& o : next.obstacles) {
    o.center += dt * o.velocity;
    for (int a = 0; a < 2; ++a) {
      const double lo = corridor.min(a) + o.radius;
      const double hi = corridor.max(a) - o.radius;
      // Mirror until inside; more than one reflection only for very small corridors.
      for (int guard = 0; guard < 8 && (o.center(a) < lo || o.center(a) > hi); ++guard) {
        if (o.center(a) < lo) {
          o.center(a) = 2.0 * lo - o.center(a);
          o.velocity(a) = std::abs(o.velocity(a));
        } else {
          o.center(a) = 2.0 * hi - o.center(a);
          o.velocity(a) = -std::abs(o.velocity(a));
        }
      }
      o.center(a) = std::clamp(o.center(a), lo, hi);
    }
  }
  return next;
}

bool in_collision(const State& robot, const std::vector<Obstacle>& obstacles, double robot_radius) {
  for (const auto& o : obstacles) {
    if ((robot.head<2>() - o.center).norm() < robot_radius + o.radius) return true;
  }
  return false;
}

std::vector<Obstacle> sense(const World& world, double window_size) {
  std::vector<Obstacle> out;
  const double half = 0.5 * window_size;
  for (const auto& o : world.obstacles) {
    const Eigen::Vector2d d = (o.center - world.robot.head<2>()).cwiseAbs();
    if (d.x() <= half + o.radius && d.y() <= half + o.radius) out.push_back(o);
  }
  return out;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

EpisodeResult run_episode(const Scenario& scenario, const PlannerConfig& planner_config, const ValueModel* model) {
  const ScenarioConfig& sc = scenario.config;
  const double dt = planner_config.mpc.dt;
  Planner planner(planner_config, model);
  const ReferencePath path(sc.start.head<2>(), sc.goal, planner_config.mpc.v_max * dt);

  World world;
  world.robot = sc.start;
  world.obstacles = scenario.obstacles;

  EpisodeResult result;
  result.trajectory.push_back(world.robot);
  std::vector<double> times;
  std::vector<double> deviations{path.lateral_deviation(world.robot.head<2>())};
  const int max_steps = static_cast<int>(std::ceil(sc.time_limit / dt - 1e-9));

  if (in_collision(world.robot, world.obstacles, sc.robot_radius)) {
    result.outcome = Outcome::Collision;
  } else {
    result.outcome = Outcome::Timeout;
    for (int step = 0; step < max_steps; ++step) {
      Control u = Control::Zero();
      try {
        const PlanResult plan = planner.plan_step(world.robot, sense(world, planner_config.geometry.window_size), path);
        u = plan.control;
        times.push_back(plan.wall_time * 1e3);
        if (plan.solution.status == SolveStatus::InfeasibleRelaxed) ++result.relaxed_plans;
      } catch (const NumericalError&) {
        ++result.planner_failures;
        planner.reset();
      }

      // Sub-sampled collision check over the step.
      World sub = world;
      bool hit = false;
      for (int s = 1; s <= kCollisionSubsamples && !hit; ++s) {
        sub = step_world(sub, Control::Zero(), dt / kCollisionSubsamples, sc.corridor);
        sub.robot = step_dynamics(world.robot, u, dt * s / kCollisionSubsamples);
        hit = in_collision(sub.robot, sub.obstacles, sc.robot_radius);
      }
      world = step_world(world, u, dt, sc.corridor);
      result.steps = step + 1;
      result.trajectory.push_back(world.robot);
      deviations.push_back(path.lateral_deviation(world.robot.head<2>()));
      if (hit) {
        result.outcome = Outcome::Collision;
        break;
      }
      if ((world.robot.head<2>() - sc.goal).norm() <= sc.goal_tolerance) {
        result.outcome = Outcome::Success;
        break;
      }
    }
  }
  result.travel_time = result.steps * dt;
  double sum = 0.0;
  for (double d : deviations) {
    sum += d;
    result.d_max = std::max(result.d_max, d);
  }
  result.d_mean = sum / static_cast<double>(deviations.size());
  if (!times.empty()) {
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    result.opt_time_mean_ms = mean;
    result.opt_time_std_ms = std::sqrt(var / static_cast<double>(times.size()));
  }
  return result;
}

BenchmarkResult run_benchmark(const std::vector<Scenario>& scenarios, const std::vector<TerminalMode>& modes,
                              const std::vector<int>& horizons, const BenchmarkOptions& options,
                              const std::function<void(std::size_t, std::size_t)>& progress) {
  if (scenarios.empty() || modes.empty() || horizons.empty()) throw ConfigError("benchmark: nothing to run");
  BenchmarkResult out;
  out.scenario_hash = scenario_list_hash(scenarios);
  for (TerminalMode m : modes) {
    for (int n : horizons) {
      for (const auto& s : scenarios) out.rows.push_back({s.id, m, n, {}});
    }
  }
  if (std::find(modes.begin(), modes.end(), TerminalMode::Rntc) != modes.end() && options.model == nullptr) {
    throw ConfigError("benchmark: rntc mode requires a checkpoint");
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const std::size_t total = out.rows.size();
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      BenchmarkRow& row = out.rows[k];
      PlannerConfig cfg = options.planner;
      cfg.mpc.mode = row.mode;
      cfg.mpc.horizon = row.horizon;
      row.result = run_episode(scenarios[k % scenarios.size()], cfg, options.model);
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, total);
      }
    }
  };
  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<Aggregate> aggregate(const BenchmarkResult& result) {
  std::vector<Aggregate> out;
  std::map<std::pair<int, int>, std::size_t> index;
  for (const auto& row : result.rows) {
    const auto key = std::make_pair(static_cast<int>(row.mode), row.horizon);
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) out.push_back(Aggregate{row.mode, row.horizon});
    (void)it;
  }
  for (auto& a : out) {
    std::vector<double> travel;
    double succ = 0, coll = 0, tout = 0, dmean = 0, dmax = 0, tmean = 0, tvar = 0;
    for (const auto& row : result.rows) {
      if (row.mode != a.mode || row.horizon != a.horizon) continue;
      const EpisodeResult& r = row.result;
      ++a.episodes;
      succ += r.success();
      coll += r.collision();
      tout += r.timeout();
      dmean += r.d_mean;
      dmax += r.d_max;
      tmean += r.opt_time_mean_ms;
      tvar += r.opt_time_std_ms * r.opt_time_std_ms;
      if (r.success()) travel.push_back(r.travel_time);
    }
    const double n = a.episodes;
    a.success_rate = succ / n;
    a.collision_rate = coll / n;
    a.timeout_rate = tout / n;
    a.d_mean = dmean / n;
    a.d_max = dmax / n;
    a.opt_time_mean_ms = tmean / n;
    a.opt_time_std_ms = std::sqrt(tvar / n);
    if (travel.empty()) {
      a.travel_time_mean = a.travel_time_std = std::numeric_limits<double>::quiet_NaN();
    } else {
      double m = 0, v = 0;
      for (double t : travel) m += t;
      m /= static_cast<double>(travel.size());
      for (double t : travel) v += (t - m) * (t - m);
      a.travel_time_mean = m;
      a.travel_time_std = std::sqrt(v / static_cast<double>(travel.size()));
    }
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const std::string& scenario_hash,
                       const std::string& config_hash) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "# scenario_hash=" << scenario_hash << " config_hash=" << config_hash << "\n";
  out << std::setprecision(10);
  return out;
}

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

void write_benchmark(const std::string& dir, const BenchmarkResult& result, const std::string& config_hash,
                     bool record_timing) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const fs::path root(dir);
  auto timing = [&](double v) { return record_timing ? num(v) : std::string("NA"); };
  const std::string& sh = result.scenario_hash;

  {
    auto out = open_csv(root / "results.csv", sh, config_hash);
    out << "scenario_id,mode,N,success,collision,timeout,travel_time_s,d_mean_m,d_max_m,opt_time_mean_ms,"
           "opt_time_std_ms\n";
    for (const auto& row : result.rows) {
      const EpisodeResult& r = row.result;
      out << row.scenario_id << ',' << to_string(row.mode) << ',' << row.horizon << ',' << r.success() << ','
          << r.collision() << ',' << r.timeout() << ',' << num(r.travel_time) << ',' << num(r.d_mean) << ','
          << num(r.d_max) << ',' << timing(r.opt_time_mean_ms) << ',' << timing(r.opt_time_std_ms) << "\n";
    }
  }
  const std::vector<Aggregate> agg = aggregate(result);
  {
    auto out = open_csv(root / "summary.csv", sh, config_hash);
    out << "mode,N,episodes,success_rate,collision_rate,timeout_rate,travel_time_mean_s,travel_time_std_s,d_mean_m,"
           "d_max_m,opt_time_mean_ms,opt_time_std_ms\n";
    for (const auto& a : agg) {
      out << to_string(a.mode) << ',' << a.horizon << ',' << a.episodes << ',' << num(a.success_rate) << ','
          << num(a.collision_rate) << ',' << num(a.timeout_rate) << ',' << num(a.travel_time_mean) << ','
          << num(a.travel_time_std) << ',' << num(a.d_mean) << ',' << num(a.d_max) << ','
          << timing(a.opt_time_mean_ms) << ',' << timing(a.opt_time_std_ms) << "\n";
    }
  }
  {
    auto out = open_csv(root / "success_vs_horizon.csv", sh, config_hash);
    out << "mode,N,success_rate\n";
    for (const auto& a : agg) out << to_string(a.mode) << ',' << a.horizon << ',' << num(a.success_rate) << "\n";
  }
  {
    auto out = open_csv(root / "opt_time_vs_horizon.csv", sh, config_hash);
    out << "mode,N,opt_time_mean_ms,opt_time_std_ms\n";
    for (const auto& a : agg) {
      out << to_string(a.mode) << ',' << a.horizon << ',' << timing(a.opt_time_mean_ms) << ','
          << timing(a.opt_time_std_ms) << "\n";
    }
  }
  {
    auto out = open_csv(root / "travel_time_vs_horizon.csv", sh, config_hash);
    out << "mode,N,travel_time_mean_s,travel_time_std_s\n";
    for (const auto& a : agg) {
      out << to_string(a.mode) << ',' << a.horizon << ',' << num(a.travel_time_mean) << ','
          << num(a.travel_time_std) << "\n";
    }
  }
  {
    auto out = open_csv(root / "pareto.csv", sh, config_hash);
    out << "mode,N,travel_time_mean_s,success_rate\n";
    for (const auto& a : agg) {
      out << to_string(a.mode) << ',' << a.horizon << ',' << num(a.travel_time_mean) << ',' << num(a.success_rate)
          << "\n";
    }
  }
}

}  // namespace rntc
