#pragma once

#include <Eigen/Core>
#include <limits>

#include "rntc/dataset.hpp"
#include "rntc/hyper_net.hpp"
#include "rntc/main_net.hpp"

namespace rntc {

/// Hypernetwork plus the main network it parametrizes, tied to a dataset geometry.
///
/// In residual mode the value estimate is V-hat = F - R-hat with R-hat = ELU(Phi(x)) + 1;
/// in direct mode V-hat = Phi(x).
class ValueModel {
 public:
  using Tensor = HyperNet<double>::Tensor;

  ValueModel(const ScaleProfile& profile, HeadMode mode, const DatasetGeometry& geometry);

  HeadMode mode() const { return main_.mode(); }
  const DatasetGeometry& geometry() const { return geometry_; }
  HyperNet<double>& hyper() { return hyper_; }
  const HyperNet<double>& hyper() const { return hyper_; }
  const MainNet<double>& main() const { return main_; }

  /// Hypernetwork input from a stored raster stack (divides by the clamp).
  Tensor input_from_payload(const Eigen::ArrayXf& sdf_stack) const;
  Eigen::VectorXd parameters_for(const Tensor& input) const { return hyper_.forward(input); }

  /// Normalized coordinates of every node of the geometry's state grid (3 x nodes).
  const Eigen::Matrix<double, 3, Eigen::Dynamic>& grid_inputs() const { return grid_inputs_; }

  /// Main-network output on every grid node.
  Eigen::ArrayXd raw_output(const Eigen::VectorXd& theta) const;
  /// V-hat on every grid node given the broadcast failure values.
  Eigen::ArrayXd value_estimate(const Eigen::VectorXd& theta, const Eigen::ArrayXd& failure_nodes) const;

 private:
  DatasetGeometry geometry_;
  HyperNet<double> hyper_;
  MainNet<double> main_;
  Eigen::Matrix<double, 3, Eigen::Dynamic> grid_inputs_;
};

struct PairMetrics {
  double iou = 0.0;
  double loss = 0.0;
  /// Nodes with V-hat >= 0 but F < 0.
  Eigen::Index dominance_violations = 0;
  /// Nodes with a non-positive residual (residual mode only).
  Eigen::Index nonpositive_residuals = 0;
};

PairMetrics evaluate_pair(const ValueModel& model, const TrainingPair& pair, double gamma,
                          double exp_cap = std::numeric_limits<double>::infinity());

/// Failure raster broadcast over heading, in StateGrid order.
Eigen::ArrayXd failure_nodes(const DatasetGeometry& geometry, const TrainingPair& pair);

}  // namespace rntc
