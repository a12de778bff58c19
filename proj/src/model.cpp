#include "rntc/model.hpp"

#include "rntc/errors.hpp"
#include "rntc/loss.hpp"

namespace rntc {

ValueModel::ValueModel(const ScaleProfile& profile, HeadMode mode, const DatasetGeometry& geometry)
    : geometry_(geometry), hyper_(profile.hyper), main_(profile.main, mode) {
  if (profile.hyper.input_size != geometry.sdf_size || profile.hyper.in_channels != geometry.past_steps) {
    throw ConfigError("hypernetwork input does not match the dataset raster geometry");
  }
  if (profile.hyper.output_size != profile.main.parameter_count()) {
    throw ConfigError("hypernetwork output size must equal the main-network parameter count");
  }
  const StateGrid grid = geometry.state_grid();
  const StateNormalizer normalizer{Eigen::Vector2d::Zero(), geometry.window_size};
  grid_inputs_.resize(3, grid.node_count());
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.ny(); ++j) {
      for (int k = 0; k < grid.ntheta(); ++k) {
        grid_inputs_.col(grid.index(i, j, k)) = normalizer.normalize({grid.x(i), grid.y(j), grid.theta(k)});
      }
    }
  }
}

ValueModel::Tensor ValueModel::input_from_payload(const Eigen::ArrayXf& sdf_stack) const {
  const Eigen::Index cells = static_cast<Eigen::Index>(geometry_.sdf_size) * geometry_.sdf_size;
  if (sdf_stack.size() != cells * geometry_.past_steps) {
    throw ConfigError("hypernetwork input payload has the wrong size");
  }
  Tensor input(geometry_.past_steps, cells);
  for (int c = 0; c < geometry_.past_steps; ++c) {
    input.row(c) = sdf_stack.segment(c * cells, cells).cast<double>().matrix().transpose() / geometry_.clamp;
  }
  return input;
}

Eigen::ArrayXd ValueModel::raw_output(const Eigen::VectorXd& theta) const {
  const std::span<const double> view(theta.data(), static_cast<std::size_t>(theta.size()));
  Eigen::ArrayXd out(grid_inputs_.cols());
  constexpr Eigen::Index kChunk = 8192;
  for (Eigen::Index begin = 0; begin < grid_inputs_.cols(); begin += kChunk) {
    const Eigen::Index n = std::min(kChunk, grid_inputs_.cols() - begin);
    out.segment(begin, n) = main_.forward_batch(view, grid_inputs_.middleCols(begin, n)).transpose().array();
  }
  return out;
}

Eigen::ArrayXd ValueModel::value_estimate(const Eigen::VectorXd& theta, const Eigen::ArrayXd& failure_nodes) const {
  Eigen::ArrayXd raw = raw_output(theta);
  if (mode() == HeadMode::Direct) return raw;
  return failure_nodes - raw;
}

Eigen::ArrayXd failure_nodes(const DatasetGeometry& geometry, const TrainingPair& pair) {
  Eigen::ArrayXd out(pair.failure.size() * geometry.ntheta);
  for (Eigen::Index c = 0; c < pair.failure.size(); ++c) {
    out.segment(c * geometry.ntheta, geometry.ntheta).setConstant(pair.failure[c]);
  }
  return out;
}

PairMetrics evaluate_pair(const ValueModel& model, const TrainingPair& pair, double gamma, double exp_cap) {
  const Eigen::VectorXd theta = model.parameters_for(model.input_from_payload(pair.sdf_pair));
  const Eigen::ArrayXd f = failure_nodes(model.geometry(), pair);
  const Eigen::ArrayXd raw = model.raw_output(theta);
  const Eigen::ArrayXd estimate = model.mode() == HeadMode::Residual ? Eigen::ArrayXd(f - raw) : raw;
  const Eigen::ArrayXd truth = pair.value.cast<double>();

  PairMetrics m;
  m.iou = iou(estimate, truth);
  m.loss = cme_loss(estimate, truth, gamma, exp_cap);
  m.dominance_violations = ((estimate >= 0.0) && (f < 0.0)).count();
  if (model.mode() == HeadMode::Residual) m.nonpositive_residuals = (raw <= 0.0).count();
  return m;
}

}  // namespace rntc
