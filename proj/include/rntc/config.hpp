#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rntc/dataset.hpp"
#include "rntc/planner.hpp"
#include "rntc/scale.hpp"
#include "rntc/simulation.hpp"
#include "rntc/train.hpp"

namespace rntc {

/// Every tunable of the pipeline, resolved from scale defaults, an INI file and command-line overrides.
struct RunConfig {
  Scale scale = Scale::Desk;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency.
  int workers = 1;

  int data_count = 1000;
  SamplerConfig sampler;
  LabelConfig label;

  TrainConfig train = TrainConfig::desk();

  PlannerConfig planner;

  std::uint64_t benchmark_seed = 1;
  int scenario_count = 100;
  ScenarioConfig scenario;
  std::vector<TerminalMode> modes{TerminalMode::Sdf, TerminalMode::Dcbf, TerminalMode::Rntc};
  std::vector<int> horizons{5, 10};

  ScaleProfile profile() const { return scale_profile(scale); }
  int resolved_workers() const;

  /// Canonical "section.key = value" listing of every key, in a fixed order.
  std::string echo() const;
  /// FNV-1a of echo(), as 16 hex digits.
  std::string hash() const;
};

/// Ordered (key, value) assignments; later entries win. Keys are "section.key".
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Reads an INI file into entries; top-level "section.key = value" lines (the echo format) are accepted too.
/// Throws IoError if unreadable, ConfigError if malformed.
ConfigEntries read_config_file(const std::string& path);

/// Applies scale defaults (run.scale is looked up first), then every entry in order.
/// Unknown keys and unparsable values throw ConfigError.
RunConfig build_config(const ConfigEntries& entries);

/// Every accepted key, in echo order.
std::vector<std::string> config_keys();

/// Writes `echo` to `path`. Throws IoError.
void write_config_echo(const std::string& path, const std::string& echo);

}  // namespace rntc
