#pragma once

#include <string>

#include "rntc/model.hpp"
#include "rntc/train.hpp"

namespace rntc {

/// Metadata stored next to the hypernetwork weights.
struct CheckpointInfo {
  HeadMode mode = HeadMode::Residual;
  DatasetGeometry geometry;
  MainNetSpec main;
  HyperNetSpec hyper;
  /// Plain-text echo of the training configuration ("key = value" lines).
  std::string config_echo;
  std::string config_hash;
};

std::string train_config_echo(const TrainConfig& config);

/// Writes magic, specs, geometry, config echo and float32 weights.
void save_checkpoint(const std::string& path, const ValueModel& model, const std::string& config_echo,
                     const std::string& config_hash);

/// Throws IoError on a missing, truncated or foreign file.
ValueModel load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr);

}  // namespace rntc
