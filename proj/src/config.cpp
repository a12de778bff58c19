#include "rntc/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"

namespace rntc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config: bad value '" + text + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: bad boolean '" + text + "' for " + key);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

template <int N>
Eigen::Matrix<double, N, N> parse_diagonal(const std::string& key, const std::string& text) {
  const auto v = parse_list<double>(key, text);
  if (static_cast<int>(v.size()) != N) {
    throw ConfigError("config: " + key + " needs " + std::to_string(N) + " comma-separated values");
  }
  return Eigen::Matrix<double, N, 1>(Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data())).asDiagonal();
}

template <int N>
std::string fmt_diagonal(const Eigen::Matrix<double, N, N>& m) {
  std::string out;
  for (int i = 0; i < N; ++i) out += (i ? "," : "") + fmt(m(i, i));
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  /// Part of the fingerprint; false for keys that cannot change any output byte.
  bool hashed = true;
};

#define RNTC_NUM(key, field, T)                                                               \
  Key {                                                                                       \
    key, [](const RunConfig& c) { return fmt_value(c.field); },                               \
        [](RunConfig& c, const std::string& v) { c.field = parse_number<T>(key, v); }         \
  }
#define RNTC_BOOL(key, field)                                                                 \
  Key {                                                                                       \
    key, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); },          \
        [](RunConfig& c, const std::string& v) { c.field = parse_bool(key, v); }              \
  }

std::string fmt_value(double v) { return fmt(v); }
std::string fmt_value(int v) { return std::to_string(v); }
std::string fmt_value(std::uint64_t v) { return std::to_string(v); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"run.scale", [](const RunConfig& c) { return to_string(c.scale); },
          [](RunConfig& c, const std::string& v) { c.scale = scale_from_string(trim(v)); }},
      RNTC_NUM("run.seed", seed, std::uint64_t),
      Key{"run.workers", [](const RunConfig& c) { return std::to_string(c.workers); },
          [](RunConfig& c, const std::string& v) { c.workers = parse_number<int>("run.workers", v); }, false},

      Key{"robot.radius", [](const RunConfig& c) { return fmt(c.scenario.robot_radius); },
          [](RunConfig& c, const std::string& v) {
            const double r = parse_number<double>("robot.radius", v);
            c.scenario.robot_radius = r;
            c.label.geometry.inflation = r;
            c.planner.mpc.inflation = r;
          }},
      Key{"robot.v_max", [](const RunConfig& c) { return fmt(c.planner.mpc.v_max); },
          [](RunConfig& c, const std::string& v) {
            c.planner.mpc.v_max = c.label.limits.v_max = parse_number<double>("robot.v_max", v);
          }},
      Key{"robot.omega_max", [](const RunConfig& c) { return fmt(c.planner.mpc.omega_max); },
          [](RunConfig& c, const std::string& v) {
            c.planner.mpc.omega_max = c.label.limits.omega_max = parse_number<double>("robot.omega_max", v);
          }},

      RNTC_NUM("data.count", data_count, int),
      RNTC_NUM("data.max_obstacles", sampler.max_obstacles, int),
      RNTC_NUM("data.obstacle_radius", sampler.obstacle_radius, double),
      RNTC_NUM("data.max_speed", sampler.max_speed, double),
      RNTC_BOOL("data.allow_empty", sampler.allow_empty),
      RNTC_NUM("data.horizon", label.geometry.horizon, double),
      RNTC_NUM("data.past_dt", label.geometry.past_dt, double),

      RNTC_NUM("hj.tolerance", label.brt.tol, double),
      RNTC_NUM("hj.cfl_fraction", label.brt.cfl_fraction, double),
      RNTC_NUM("hj.probe_window", label.brt.probe_window, double),
      RNTC_NUM("hj.flip_tolerance", label.brt.flip_tolerance, double),
      RNTC_NUM("hj.interior_margin", label.brt.interior_margin, double),

      Key{"train.mode", [](const RunConfig& c) { return to_string(c.train.mode); },
          [](RunConfig& c, const std::string& v) { c.train.mode = head_mode_from_string(trim(v)); }},
      RNTC_NUM("train.seed", train.seed, std::uint64_t),
      RNTC_NUM("train.epochs", train.epochs, int),
      RNTC_NUM("train.batch_size", train.batch_size, int),
      RNTC_NUM("train.learning_rate", train.learning_rate, double),
      Key{"train.lr_drop_epochs",
          [](const RunConfig& c) {
            return fmt_list<int>(c.train.lr_drop_epochs, [](const int& e) { return std::to_string(e); });
          },
          [](RunConfig& c, const std::string& v) { c.train.lr_drop_epochs = parse_list<int>("train.lr_drop_epochs", v); }},
      RNTC_NUM("train.lr_drop_factor", train.lr_drop_factor, double),
      RNTC_NUM("train.gamma", train.gamma, double),
      RNTC_NUM("train.mse_epochs", train.mse_epochs, int),
      RNTC_NUM("train.nodes_per_sample", train.nodes_per_sample, int),
      RNTC_NUM("train.val_fraction", train.val_fraction, double),
      RNTC_NUM("train.grad_clip", train.grad_clip, double),
      RNTC_NUM("train.exp_cap", train.exp_cap, double),

      RNTC_NUM("mpc.horizon", planner.mpc.horizon, int),
      RNTC_NUM("mpc.dt", planner.mpc.dt, double),
      Key{"mpc.q", [](const RunConfig& c) { return fmt_diagonal<3>(c.planner.mpc.Q); },
          [](RunConfig& c, const std::string& v) { c.planner.mpc.Q = parse_diagonal<3>("mpc.q", v); }},
      Key{"mpc.r", [](const RunConfig& c) { return fmt_diagonal<2>(c.planner.mpc.R); },
          [](RunConfig& c, const std::string& v) { c.planner.mpc.R = parse_diagonal<2>("mpc.r", v); }},
      Key{"mpc.q_terminal", [](const RunConfig& c) { return fmt_diagonal<3>(c.planner.mpc.Q_terminal); },
          [](RunConfig& c, const std::string& v) { c.planner.mpc.Q_terminal = parse_diagonal<3>("mpc.q_terminal", v); }},
      RNTC_NUM("mpc.safety_margin", planner.mpc.safety_margin, double),
      RNTC_NUM("mpc.slack_penalty", planner.mpc.slack_penalty, double),
      RNTC_NUM("mpc.gamma_cbf", planner.mpc.gamma_cbf, double),
      RNTC_NUM("mpc.max_iterations", planner.mpc.max_iterations, int),
      RNTC_NUM("mpc.step_tolerance", planner.mpc.step_tolerance, double),
      RNTC_NUM("mpc.feasibility_tolerance", planner.mpc.feasibility_tolerance, double),
      RNTC_NUM("mpc.prune_distance", planner.mpc.prune_distance, double),
      RNTC_NUM("mpc.lead_steps", planner.lead_steps, int),

      RNTC_NUM("benchmark.seed", benchmark_seed, std::uint64_t),
      RNTC_NUM("benchmark.scenarios", scenario_count, int),
      Key{"benchmark.modes",
          [](const RunConfig& c) {
            return fmt_list<TerminalMode>(c.modes, [](const TerminalMode& m) { return to_string(m); });
          },
          [](RunConfig& c, const std::string& v) {
            c.modes.clear();
            for (const auto& m : split_list(v)) c.modes.push_back(terminal_mode_from_string(m));
          }},
      Key{"benchmark.horizons",
          [](const RunConfig& c) {
            return fmt_list<int>(c.horizons, [](const int& h) { return std::to_string(h); });
          },
          [](RunConfig& c, const std::string& v) { c.horizons = parse_list<int>("benchmark.horizons", v); }},
      RNTC_NUM("benchmark.obstacle_count", scenario.obstacle_count, int),
      RNTC_NUM("benchmark.obstacle_radius", scenario.obstacle_radius, double),
      RNTC_NUM("benchmark.max_speed", scenario.max_speed, double),
      RNTC_NUM("benchmark.start_clearance", scenario.start_clearance, double),
      RNTC_NUM("benchmark.goal_tolerance", scenario.goal_tolerance, double),
      RNTC_NUM("benchmark.time_limit", scenario.time_limit, double),
  };
  return table;
}

#undef RNTC_NUM
#undef RNTC_BOOL

const Key& find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (k.name == name) return k;
  }
  throw ConfigError("config: unknown key '" + name + "'");
}

RunConfig scale_defaults(Scale scale) {
  RunConfig c;
  c.scale = scale;
  c.label.geometry = DatasetGeometry::from_profile(scale_profile(scale));
  c.train = scale == Scale::Paper ? TrainConfig::paper() : TrainConfig::desk();
  c.data_count = scale == Scale::Paper ? 40000 : 1000;
  return c;
}

void validate(const RunConfig& c) {
  if (c.workers < 0) throw ConfigError("config: run.workers must be >= 0");
  if (c.data_count < 1) throw ConfigError("config: data.count must be >= 1");
  if (c.sampler.max_obstacles < 0) throw ConfigError("config: data.max_obstacles must be >= 0");
  if (c.train.epochs < 1 || c.train.batch_size < 1) throw ConfigError("config: train.epochs and batch_size must be >= 1");
  if (!(c.train.learning_rate > 0.0)) throw ConfigError("config: train.learning_rate must be positive");
  if (!(c.train.gamma >= 0.0 && c.train.gamma <= 1.0)) throw ConfigError("config: train.gamma must lie in [0, 1]");
  if (c.scenario_count < 1) throw ConfigError("config: benchmark.scenarios must be >= 1");
  if (c.modes.empty()) throw ConfigError("config: benchmark.modes is empty");
  if (c.horizons.empty()) throw ConfigError("config: benchmark.horizons is empty");
  for (int h : c.horizons) {
    if (h < 1) throw ConfigError("config: horizons must be >= 1");
  }
  if (c.planner.lead_steps < 0) throw ConfigError("config: mpc.lead_steps must be >= 0");
  c.planner.mpc.validate();
}

}  // namespace

int RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(*this) + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::string hashed;
  for (const auto& k : keys()) {
    if (k.hashed) hashed += k.name + " = " + k.get(*this) + "\n";
  }
  return io::hex64(io::fnv1a(hashed));
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config '" + path + "': " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ConfigEntries entries;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      // Top-level "section.key = value" lines, as written by RunConfig::echo().
      if (section.find('.') == std::string::npos) {
        throw ConfigError("config '" + path + "': key '" + section + "' outside a section");
      }
      entries.emplace_back(section, body.data());
      continue;
    }
    for (const auto& [key, value] : body) entries.emplace_back(section + "." + key, value.data());
  }
  return entries;
}

RunConfig build_config(const ConfigEntries& entries) {
  Scale scale = Scale::Desk;
  for (const auto& [key, value] : entries) {
    if (key == "run.scale") scale = scale_from_string(trim(value));
  }
  RunConfig c = scale_defaults(scale);
  for (const auto& [key, value] : entries) find_key(key).set(c, value);
  c.planner.geometry = c.label.geometry;
  validate(c);
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

void write_config_echo(const std::string& path, const std::string& echo) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << echo;
  if (!out) throw IoError("failed to write '" + path + "'");
}

}  // namespace rntc
