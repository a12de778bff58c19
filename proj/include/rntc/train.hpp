#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rntc/dataset.hpp"
#include "rntc/model.hpp"

namespace rntc {

struct TrainConfig {
  double gamma = 0.1;
  int epochs = 100;
  int batch_size = 40;
  double learning_rate = 1e-4;
  std::vector<int> lr_drop_epochs{85, 95};
  double lr_drop_factor = 0.1;
  std::uint64_t seed = 0;
  HeadMode mode = HeadMode::Residual;
  /// Leading epochs trained with plain MSE before switching to CME.
  int mse_epochs = 1;
  /// Grid nodes sampled per pair for the training loss; 0 uses every node.
  int nodes_per_sample = 0;
  double val_fraction = 0.1;
  /// Global L2 norm the batch gradient is clipped to; 0 disables clipping.
  double grad_clip = 1.0;
  /// Exponent beyond which the training loss continues the exponential linearly; infinity disables it.
  double exp_cap = 20.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Full schedule: 100 epochs, batch 40, lr 1e-4 dropped 10x at 85 and 95.
  static TrainConfig paper();
  /// Desk schedule used by the acceptance suite.
  static TrainConfig desk();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_iou = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  /// A NaN loss stopped training; the model holds the last finite parameters.
  bool diverged = false;
};

/// Pairs whose position in the file puts them in the validation split.
bool is_validation(std::size_t position, double val_fraction);

double learning_rate_at(const TrainConfig& config, int epoch);

/// Supervised training of the hypernetwork weights of `model` with Adam.
TrainResult train(ValueModel& model, const std::vector<TrainingPair>& data, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Mean training loss of one pair and its gradient w.r.t. the hypernetwork parameters (accumulated into grad).
double pair_loss_and_gradient(const ValueModel& model, const TrainingPair& pair, const std::vector<Eigen::Index>& nodes,
                              double gamma, Eigen::Ref<Eigen::VectorXd> grad,
                              double exp_cap = std::numeric_limits<double>::infinity());

}  // namespace rntc
