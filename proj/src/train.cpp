#include "rntc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"
#include "rntc/loss.hpp"

namespace rntc {

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 8;
  c.lr_drop_epochs = {26, 29};
  c.nodes_per_sample = 2048;
  return c;
}

bool is_validation(std::size_t position, double val_fraction) {
  if (val_fraction <= 0.0) return false;
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / val_fraction)));
  return position % stride == stride - 1;
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  double lr = config.learning_rate;
  for (int drop : config.lr_drop_epochs) {
    if (epoch > drop) lr *= config.lr_drop_factor;
  }
  return lr;
}

double pair_loss_and_gradient(const ValueModel& model, const TrainingPair& pair, const std::vector<Eigen::Index>& nodes,
                              double gamma, Eigen::Ref<Eigen::VectorXd> grad, double exp_cap) {
  HyperNet<double>::Cache hyper_cache;
  const Eigen::VectorXd theta = model.hyper().forward(model.input_from_payload(pair.sdf_pair), &hyper_cache);
  const std::span<const double> view(theta.data(), static_cast<std::size_t>(theta.size()));

  const auto& all = model.grid_inputs();
  const int ntheta = model.geometry().ntheta;
  const Eigen::Index n = nodes.empty() ? all.cols() : static_cast<Eigen::Index>(nodes.size());
  Eigen::Matrix<double, 3, Eigen::Dynamic> x(3, n);
  Eigen::ArrayXd f(n), truth(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index node = nodes.empty() ? c : nodes[static_cast<std::size_t>(c)];
    x.col(c) = all.col(node);
    f[c] = pair.failure[node / ntheta];
    truth[c] = pair.value[node];
  }

  MainNet<double>::Cache cache;
  const Eigen::ArrayXd raw = model.main().forward_batch(view, x, &cache).transpose().array();
  const bool residual = model.mode() == HeadMode::Residual;
  const Eigen::ArrayXd estimate = residual ? Eigen::ArrayXd(f - raw) : raw;
  const double loss = cme_loss(estimate, truth, gamma, exp_cap);
  Eigen::ArrayXd g = cme_loss_gradient(estimate, truth, gamma, exp_cap);
  if (residual) g = -g;

  Eigen::VectorXd grad_theta = Eigen::VectorXd::Zero(theta.size());
  model.main().backward_batch(view, cache, g.matrix().transpose(), grad_theta);
  model.hyper().backward(hyper_cache, grad_theta, grad);
  return loss;
}

TrainResult train(ValueModel& model, const std::vector<TrainingPair>& data, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (config.epochs < 1 || config.batch_size < 1) throw ConfigError("train: epochs and batch size must be >= 1");
  if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) throw ConfigError("train: gamma must lie in [0, 1]");
  if (config.mode != model.mode()) throw ConfigError("train: model head does not match the configured mode");

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t p = 0; p < data.size(); ++p) (is_validation(p, config.val_fraction) ? val_idx : train_idx).push_back(p);
  if (train_idx.empty()) throw ConfigError("train: no training pairs after the validation split");

  model.hyper().initialize(io::mix_seed(config.seed, 0, 1));
  std::mt19937_64 shuffle_rng(io::mix_seed(config.seed, 0, 2));
  std::mt19937_64 node_rng(io::mix_seed(config.seed, 0, 3));

  Eigen::VectorXd& params = model.hyper().params();
  const Eigen::Index p = params.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p), v = Eigen::VectorXd::Zero(p), grad(p), backup(p);
  const Eigen::Index total_nodes = model.grid_inputs().cols();
  const bool subsample = config.nodes_per_sample > 0 && config.nodes_per_sample < total_nodes;
  std::uniform_int_distribution<Eigen::Index> node_dist(0, total_nodes - 1);
  std::vector<Eigen::Index> nodes;
  long step = 0;

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = learning_rate_at(config, epoch);
    const double gamma = epoch <= config.mse_epochs ? 1.0 : config.gamma;
    std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(train_idx.size(), begin + static_cast<std::size_t>(config.batch_size));
      grad.setZero();
      double batch_loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        nodes.clear();
        if (subsample) {
          for (int k = 0; k < config.nodes_per_sample; ++k) nodes.push_back(node_dist(node_rng));
        }
        batch_loss += pair_loss_and_gradient(model, data[train_idx[b]], nodes, gamma, grad, config.exp_cap);
      }
      const double count = static_cast<double>(end - begin);
      grad /= count;
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        result.diverged = true;
        return result;
      }
      loss_sum += batch_loss;
      const double norm = grad.norm();
      if (config.grad_clip > 0.0 && norm > config.grad_clip) grad *= config.grad_clip / norm;

      backup = params;
      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * grad;
      v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
      if (!params.allFinite()) {
        params = backup;
        result.diverged = true;
        return result;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_idx.size());
    for (std::size_t idx : val_idx) {
      const PairMetrics metrics = evaluate_pair(model, data[idx], config.gamma, config.exp_cap);
      record.val_loss += metrics.loss;
      record.val_iou += metrics.iou;
    }
    if (!val_idx.empty()) {
      record.val_loss /= static_cast<double>(val_idx.size());
      record.val_iou /= static_cast<double>(val_idx.size());
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace rntc
