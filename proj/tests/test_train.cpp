#include <gtest/gtest.h>

#include <filesystem>

#include "rntc/checkpoint.hpp"
#include "rntc/errors.hpp"
#include "rntc/train.hpp"

using namespace rntc;

namespace {

const ScaleProfile& desk() {
  static const ScaleProfile p = scale_profile(Scale::Desk);
  return p;
}

DatasetGeometry desk_geometry() { return DatasetGeometry::from_profile(desk()); }

/// Small labelled set shared by the tests in this file.
const std::vector<TrainingPair>& pairs() {
  static const std::vector<TrainingPair> data = [] {
    LabelConfig cfg;
    cfg.geometry = desk_geometry();
    std::vector<TrainingPair> out;
    SamplerConfig sampler;
    sampler.allow_empty = false;
    for (int i = 0; i < 10; ++i) out.push_back(label(sample_scenario(4, i, 0, sampler), cfg));
    return out;
  }();
  return data;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rntc_test_" + name)).string();
}

}  // namespace

TEST(Train, ValidationSplitTakesEveryTenthPair) {
  EXPECT_FALSE(is_validation(0, 0.1));
  EXPECT_TRUE(is_validation(9, 0.1));
  EXPECT_TRUE(is_validation(19, 0.1));
  EXPECT_FALSE(is_validation(10, 0.1));
  EXPECT_FALSE(is_validation(9, 0.0));
}

TEST(Train, LearningRateSchedule) {
  TrainConfig c;
  c.learning_rate = 1.0;
  c.lr_drop_epochs = {3, 5};
  c.lr_drop_factor = 0.1;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 3), 1.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 4), 0.1);
  EXPECT_NEAR(learning_rate_at(c, 6), 0.01, 1e-15);
}

TEST(Train, LossGradientMatchesFiniteDifferences) {
  for (HeadMode mode : {HeadMode::Residual, HeadMode::Direct}) {
    ValueModel model(desk(), mode, desk_geometry());
    model.hyper().initialize(17);
    const TrainingPair& pair = pairs()[3];
    std::vector<Eigen::Index> nodes;
    for (Eigen::Index n = 0; n < model.grid_inputs().cols(); n += 97) nodes.push_back(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.hyper().params().size());
    pair_loss_and_gradient(model, pair, nodes, 0.1, grad, 20.0);

    const auto layout = model.hyper().spec().layout();
    std::vector<Eigen::Index> probe = {layout.conv_weight[0] + 1, layout.conv_bias[1], layout.conv_weight[2] + 7,
                                       layout.conv_bias[3], layout.head_weight + 100, layout.head_bias + 5,
                                       layout.head_bias + model.main().parameter_count() - 1};
    Eigen::VectorXd scratch = grad;
    for (Eigen::Index i : probe) {
      auto& p = model.hyper().params();
      const double keep = p[i];
      const double h = 1e-6 * std::max(1.0, std::abs(keep));
      p[i] = keep + h;
      const double fp = pair_loss_and_gradient(model, pair, nodes, 0.1, scratch, 20.0);
      p[i] = keep - h;
      const double fm = pair_loss_and_gradient(model, pair, nodes, 0.1, scratch, 20.0);
      p[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-3 * grad.cwiseAbs().maxCoeff()});
      EXPECT_LE(std::abs(grad[i] - fd) / scale, 1e-4) << to_string(mode) << " param " << i;
    }
  }
}

TEST(Train, ResidualEstimateIsDominatedByFailure) {
  ValueModel model(desk(), HeadMode::Residual, desk_geometry());
  model.hyper().initialize(3);
  for (const auto& pair : pairs()) {
    const PairMetrics m = evaluate_pair(model, pair, 0.1);
    EXPECT_EQ(m.dominance_violations, 0);
    EXPECT_EQ(m.nonpositive_residuals, 0);
  }
}

TEST(Train, ShortRunIsDeterministicAndFinite) {
  TrainConfig cfg = TrainConfig::desk();
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.nodes_per_sample = 256;
  cfg.learning_rate = 1e-3;
  auto run = [&] {
    ValueModel model(desk(), HeadMode::Residual, desk_geometry());
    const TrainResult r = train(model, pairs(), cfg);
    return std::make_pair(r, model.hyper().params());
  };
  const auto [a, pa] = run();
  const auto [b, pb] = run();
  ASSERT_EQ(a.history.size(), 2u);
  EXPECT_FALSE(a.diverged);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].val_iou, b.history[e].val_iou);
    EXPECT_TRUE(std::isfinite(a.history[e].val_loss));
  }
  EXPECT_EQ(pa, pb);
}

TEST(Train, ModeMismatchIsAConfigError) {
  ValueModel model(desk(), HeadMode::Direct, desk_geometry());
  TrainConfig cfg = TrainConfig::desk();
  cfg.mode = HeadMode::Residual;
  EXPECT_THROW(train(model, pairs(), cfg), ConfigError);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  ValueModel model(desk(), HeadMode::Direct, desk_geometry());
  model.hyper().initialize(8);
  const std::string path = temp_path("ckpt.bin");
  save_checkpoint(path, model, "train.epochs = 3\n", "0123456789abcdef");
  CheckpointInfo info;
  const ValueModel back = load_checkpoint(path, &info);
  EXPECT_EQ(info.mode, HeadMode::Direct);
  EXPECT_EQ(info.config_hash, "0123456789abcdef");
  EXPECT_EQ(info.config_echo, "train.epochs = 3\n");
  EXPECT_TRUE(info.geometry.compatible(desk_geometry()));
  const auto input = model.input_from_payload(pairs()[0].sdf_pair);
  // Weights are stored as float32.
  const Eigen::VectorXd a = model.parameters_for(input), b = back.parameters_for(input);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-4 * (1.0 + a.cwiseAbs().maxCoeff()));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), IoError);
}

TEST(Checkpoint, ConfigEchoListsKeys) {
  const std::string echo = train_config_echo(TrainConfig::desk());
  EXPECT_NE(echo.find("epochs = 30"), std::string::npos);
  EXPECT_NE(echo.find("gamma = 0.1"), std::string::npos);
}
