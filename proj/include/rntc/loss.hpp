#pragma once

#include <Eigen/Core>
#include <limits>

namespace rntc {

/// mean(gamma (v - v_hat)^2 + (1 - gamma) exp(-v v_hat)). Throws NumericalError on NaN input.
///
/// With a finite `exp_cap` c the exponential is continued linearly beyond exponent c,
/// e^c (1 + z - c), which keeps the loss convex and C1 but finite for badly signed predictions.
double cme_loss(const Eigen::Ref<const Eigen::ArrayXd>& predicted, const Eigen::Ref<const Eigen::ArrayXd>& target,
                double gamma, double exp_cap = std::numeric_limits<double>::infinity());

/// Per-element derivative of cme_loss w.r.t. the prediction (already divided by the element count).
Eigen::ArrayXd cme_loss_gradient(const Eigen::Ref<const Eigen::ArrayXd>& predicted,
                                 const Eigen::Ref<const Eigen::ArrayXd>& target, double gamma,
                                 double exp_cap = std::numeric_limits<double>::infinity());

/// Principal branch of the Lambert W function for z >= 0 (Halley iteration).
double lambert_w(double z);

/// Minimizer of gamma (y - y_hat)^2 + (1 - gamma) exp(-y y_hat) over y_hat, gamma in (0, 1].
double cme_optimal_prediction(double y, double gamma);

/// |{a >= 0} & {b >= 0}| / |{a >= 0} | {b >= 0}|; 1 when both safe sets are empty.
double iou(const Eigen::Ref<const Eigen::ArrayXd>& a, const Eigen::Ref<const Eigen::ArrayXd>& b);

}  // namespace rntc
