#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "rntc/checkpoint.hpp"
#include "rntc/config.hpp"
#include "rntc/errors.hpp"
#include "rntc/hj.hpp"
#include "rntc/model.hpp"
#include "rntc/report.hpp"
#include "rntc/simulation.hpp"
#include "rntc/train.hpp"

namespace {

using namespace rntc;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

/// Options shared by every command; flags override the config file, --set overrides both.
struct Common {
  std::string config_path;
  std::string scale;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "INI configuration file");
  cmd->add_option("--scale", c.scale, "desk or paper");
  cmd->add_option("--seed", c.seed, "run seed");
  cmd->add_option("--workers", c.workers, "worker threads (0 = all cores)");
  cmd->add_option("--set", c.sets, "section.key=value override (repeatable)");
}

RunConfig resolve(const Common& c, const ConfigEntries& flags) {
  ConfigEntries entries;
  if (!c.config_path.empty()) entries = read_config_file(c.config_path);
  if (!c.scale.empty()) entries.emplace_back("run.scale", c.scale);
  if (c.seed) entries.emplace_back("run.seed", std::to_string(*c.seed));
  if (c.workers) entries.emplace_back("run.workers", std::to_string(*c.workers));
  entries.insert(entries.end(), flags.begin(), flags.end());
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return build_config(entries);
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(10);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t last = 0;
  const auto stats = generate_dataset(
      out, cfg.seed, cfg.data_count, cfg.label, cfg.sampler, cfg.resolved_workers(),
      [&](std::uint64_t done, std::uint64_t dropped) {
        if (done == static_cast<std::uint64_t>(cfg.data_count) || done >= last + std::max(1, cfg.data_count / 20)) {
          last = done;
          std::cerr << "gen-data: " << done << "/" << cfg.data_count << " pairs, " << dropped << " dropped\n";
        }
      },
      cfg.hash());
  write_config_echo(out + ".config.ini", cfg.echo());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "wrote " << stats.written << " pairs to " << out << " (" << stats.dropped
            << " non-converged pairs dropped and resampled, " << std::fixed << std::setprecision(1) << secs
            << " s)\nconfig_hash " << cfg.hash() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out, std::string history) {
  {
    DatasetReader reader(data_path);
    if (!reader.geometry().compatible(cfg.label.geometry)) {
      throw ConfigError("dataset '" + data_path + "' was generated with a different geometry than the configured " +
                        to_string(cfg.scale) + " scale");
    }
  }
  const auto data = read_dataset(data_path, cfg.label.geometry);
  ValueModel model(cfg.profile(), cfg.train.mode, cfg.label.geometry);
  if (history.empty()) history = out + ".history.csv";
  auto hist = open_out(history);
  hist << "# config_hash=" << cfg.hash() << "\n";
  hist << "epoch,train_loss,val_loss,val_iou\n";
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult result = train(model, data, cfg.train, [&](const EpochRecord& r) {
    hist << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_iou << "\n";
    hist.flush();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "epoch " << r.epoch << "/" << cfg.train.epochs << "  train " << r.train_loss << "  val "
              << r.val_loss << "  iou " << r.val_iou << "  (" << std::fixed << std::setprecision(0) << secs
              << " s)\n"
              << std::defaultfloat << std::setprecision(6);
  });
  save_checkpoint(out, model, cfg.echo(), cfg.hash());
  write_config_echo(out + ".config.ini", cfg.echo());
  std::cout << "wrote " << to_string(cfg.train.mode) << " checkpoint " << out << " and " << history << "\n";
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "final train_loss " << std::setprecision(10) << last.train_loss << " val_loss " << last.val_loss
              << " val_iou " << last.val_iou << "\n";
  }
  if (result.diverged) {
    std::cerr << "train: non-finite loss; stopped early and kept the last finite parameters\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt, const std::string& data_path, const std::string& out) {
  CheckpointInfo info;
  const ValueModel model = load_checkpoint(ckpt, &info);
  const auto data = read_dataset(data_path, info.geometry);
  auto csv = open_out(out);
  csv << "# config_hash=" << cfg.hash() << " checkpoint_config_hash=" << info.config_hash << "\n";
  csv << "pair_id,split,iou,cme_loss,dominance_violations,nonpositive_residuals\n";
  std::vector<double> iou_all, loss_all, iou_val, loss_val;
  Eigen::Index dominance = 0, nonpositive = 0;
  for (std::size_t p = 0; p < data.size(); ++p) {
    const PairMetrics m = evaluate_pair(model, data[p], cfg.train.gamma, cfg.train.exp_cap);
    const bool val = is_validation(p, cfg.train.val_fraction);
    csv << data[p].id << ',' << (val ? "val" : "train") << ',' << m.iou << ',' << m.loss << ','
        << m.dominance_violations << ',' << m.nonpositive_residuals << "\n";
    iou_all.push_back(m.iou);
    loss_all.push_back(m.loss);
    if (val) {
      iou_val.push_back(m.iou);
      loss_val.push_back(m.loss);
    }
    dominance += m.dominance_violations;
    nonpositive += m.nonpositive_residuals;
  }
  std::cout << std::setprecision(6) << "mode " << to_string(info.mode) << ", " << data.size() << " pairs\n"
            << "iou       all " << mean(iou_all) << " +- " << stddev(iou_all) << "   val " << mean(iou_val) << " +- "
            << stddev(iou_val) << "\n"
            << "cme_loss  all " << mean(loss_all) << " +- " << stddev(loss_all) << "   val " << mean(loss_val)
            << " +- " << stddev(loss_val) << "\n"
            << "dominance violations " << dominance << "\n";
  if (info.mode == HeadMode::Residual) std::cout << "non-positive residuals " << nonpositive << "\n";
  return 0;
}

std::vector<Obstacle> parse_scenario(const std::string& path, double& horizon) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  std::vector<Obstacle> obstacles;
  try {
    if (j.contains("horizon")) horizon = j.at("horizon").get<double>();
    for (const auto& o : j.value("obstacles", nlohmann::json::array())) {
      Obstacle ob;
      const auto c = o.at("center").get<std::vector<double>>();
      if (c.size() != 2) throw ConfigError("scenario: center needs two numbers");
      ob.center = {c[0], c[1]};
      if (o.contains("velocity")) {
        const auto v = o.at("velocity").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("scenario: velocity needs two numbers");
        ob.velocity = {v[0], v[1]};
      }
      ob.radius = o.value("radius", 0.3);
      if (!(ob.radius >= 0.0)) throw ConfigError("scenario: radius must be >= 0");
      obstacles.push_back(ob);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  return obstacles;
}

int cmd_hj_solve(const RunConfig& cfg, const std::string& scenario, const std::string& out) {
  const DatasetGeometry& g = cfg.label.geometry;
  double horizon = g.horizon;
  EnvironmentSnapshot snapshot;
  snapshot.obstacles = parse_scenario(scenario, horizon);
  snapshot.window_size = g.window_size;
  const StateGrid grid = g.state_grid();
  BrtOptions options = cfg.label.brt;
  options.horizon = horizon;
  options.time_invariant = std::all_of(snapshot.obstacles.begin(), snapshot.obstacles.end(),
                                       [](const Obstacle& o) { return o.velocity.isZero(0.0); });
  const BrtResult r = solve_brt(snapshot_failure(snapshot, grid, g.inflation, g.clamp), grid, options, cfg.label.limits);
  write_value_grid(out, r.value, cfg.hash());
  write_config_echo(out + ".config.ini", cfg.echo());
  const Eigen::ArrayXd& v = r.value.values;
  const double safe = static_cast<double>((v >= 0.0).count()) / static_cast<double>(v.size());
  std::cout << std::setprecision(6) << "grid " << grid.nx() << "x" << grid.ny() << "x" << grid.ntheta() << ", "
            << snapshot.obstacles.size() << " obstacles, horizon " << horizon << " s, " << r.steps << " steps\n"
            << "min V " << v.minCoeff() << "  max V " << v.maxCoeff() << "\n"
            << "safe fraction " << safe << "\n"
            << "converged " << (r.converged ? "yes" : "no") << " (horizon change " << r.horizon_change
            << " m, label flips " << r.flip_fraction << ")\n"
            << "wrote " << out << "\n";
  if (!r.converged) std::cerr << "hj-solve: value function did not converge; artifact written anyway\n";
  return 0;
}

int cmd_benchmark(const RunConfig& cfg, const std::string& ckpt, const std::string& out_dir, bool record_timing) {
  const bool needs_model =
      std::find(cfg.modes.begin(), cfg.modes.end(), TerminalMode::Rntc) != cfg.modes.end();
  std::optional<ValueModel> model;
  if (needs_model) {
    if (ckpt.empty()) throw ConfigError("benchmark: mode rntc needs --checkpoint");
    model.emplace(load_checkpoint(ckpt));
  }
  const auto scenarios = make_scenarios(cfg.benchmark_seed, cfg.scenario_count, cfg.scenario);
  BenchmarkOptions options;
  options.planner = cfg.planner;
  options.model = model ? &*model : nullptr;
  options.workers = cfg.resolved_workers();
  std::size_t last = 0;
  const BenchmarkResult result =
      run_benchmark(scenarios, cfg.modes, cfg.horizons, options, [&](std::size_t done, std::size_t total) {
        if (done == total || done >= last + std::max<std::size_t>(1, total / 20)) {
          last = done;
          std::cerr << "benchmark: " << done << "/" << total << " episodes\n";
        }
      });
  write_benchmark(out_dir, result, cfg.hash(), record_timing);
  write_config_echo((fs::path(out_dir) / "config.ini").string(), cfg.echo());
  std::cout << "scenario_hash " << result.scenario_hash << "  config_hash " << cfg.hash() << "\n";
  std::cout << "mode   N    success  collision  timeout  travel[s]  opt[ms]\n";
  for (const auto& a : aggregate(result)) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-5s %3d    %6.2f     %6.2f   %6.2f   %8.2f  %7.3f\n", to_string(a.mode).c_str(),
                  a.horizon, a.success_rate, a.collision_rate, a.timeout_rate, a.travel_time_mean, a.opt_time_mean_ms);
    std::cout << line;
  }
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual neural terminal constraint MPC: data generation, training, evaluation, benchmarks"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-data", "label random obstacle windows with the HJ solver");
  add_common(gen, common);
  std::optional<int> count;
  std::string gen_out;
  gen->add_option("--count", count, "number of pairs");
  gen->add_option("--out", gen_out, "dataset file")->required();

  auto* tr = app.add_subcommand("train", "train a hypernetwork on a dataset");
  add_common(tr, common);
  std::string data_path, train_out, history, mode;
  std::optional<int> epochs;
  tr->add_option("--data", data_path, "dataset file")->required();
  tr->add_option("--mode", mode, "rntc (residual head) or ntc (direct head)");
  tr->add_option("--epochs", epochs, "training epochs");
  tr->add_option("--out", train_out, "checkpoint file")->required();
  tr->add_option("--history", history, "history CSV (default <out>.history.csv)");

  auto* ev = app.add_subcommand("eval-model", "per-pair IoU, loss and dominance violations");
  add_common(ev, common);
  std::string eval_ckpt, eval_data, eval_out;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--data", eval_data, "dataset file")->required();
  ev->add_option("--out", eval_out, "metrics CSV")->required();

  auto* hj = app.add_subcommand("hj-solve", "solve one scenario for inspection");
  add_common(hj, common);
  std::string scenario, hj_out;
  hj->add_option("--scenario-json", scenario, "scenario JSON")->required();
  hj->add_option("--out", hj_out, "value grid file")->required();

  auto* bm = app.add_subcommand("benchmark", "closed-loop benchmark over seeded scenarios");
  add_common(bm, common);
  std::string bm_ckpt, modes, horizons, out_dir;
  std::optional<int> scenarios;
  bool record_timing = false;
  bm->add_option("--checkpoint", bm_ckpt, "residual-head checkpoint (needed for rntc)");
  bm->add_option("--modes", modes, "comma list of rntc, sdf, dcbf, none");
  bm->add_option("--horizons", horizons, "comma list of horizons");
  bm->add_option("--scenarios", scenarios, "number of scenarios");
  bm->add_option("--out-dir", out_dir, "output directory")->required();
  bm->add_flag("--record-timing", record_timing, "write measured plan times (output no longer byte-stable)");

  auto* rp = app.add_subcommand("report", "summary table and SVG plots from benchmark CSVs");
  std::string in_dir, report_out;
  rp->add_option("--in-dir", in_dir, "benchmark output directory")->required();
  rp->add_option("--out-dir", report_out, "where to write plots (default --in-dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      ConfigEntries flags;
      if (count) flags.emplace_back("data.count", std::to_string(*count));
      return cmd_gen_data(resolve(common, flags), gen_out);
    }
    if (*tr) {
      ConfigEntries flags;
      if (!mode.empty()) flags.emplace_back("train.mode", mode);
      if (epochs) flags.emplace_back("train.epochs", std::to_string(*epochs));
      return cmd_train(resolve(common, flags), data_path, train_out, history);
    }
    if (*ev) return cmd_eval(resolve(common, {}), eval_ckpt, eval_data, eval_out);
    if (*hj) return cmd_hj_solve(resolve(common, {}), scenario, hj_out);
    if (*bm) {
      ConfigEntries flags;
      if (!modes.empty()) flags.emplace_back("benchmark.modes", modes);
      if (!horizons.empty()) flags.emplace_back("benchmark.horizons", horizons);
      if (scenarios) flags.emplace_back("benchmark.scenarios", std::to_string(*scenarios));
      return cmd_benchmark(resolve(common, flags), bm_ckpt, out_dir, record_timing);
    }
    if (*rp) {
      std::cout << make_report(in_dir, report_out.empty() ? in_dir : report_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
