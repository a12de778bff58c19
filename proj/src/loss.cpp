#include "rntc/loss.hpp"

#include <cmath>

#include "rntc/errors.hpp"

namespace rntc {

namespace {

void check_inputs(const Eigen::Ref<const Eigen::ArrayXd>& predicted, const Eigen::Ref<const Eigen::ArrayXd>& target,
                  double gamma) {
  if (predicted.size() != target.size()) throw ConfigError("cme_loss: shape mismatch");
  if (predicted.size() == 0) throw ConfigError("cme_loss: empty input");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("cme_loss: gamma must lie in [0, 1]");
  if (predicted.isNaN().any() || target.isNaN().any()) throw NumericalError("cme_loss: NaN in inputs");
}

Eigen::ArrayXd capped_exp(const Eigen::ArrayXd& z, double cap) {
  if (!std::isfinite(cap)) return z.exp();
  const double ec = std::exp(cap);
  return (z > cap).select(ec * (1.0 + z - cap), z.exp());
}

Eigen::ArrayXd capped_exp_derivative(const Eigen::ArrayXd& z, double cap) {
  if (!std::isfinite(cap)) return z.exp();
  return z.min(cap).exp();
}

}  // namespace

double cme_loss(const Eigen::Ref<const Eigen::ArrayXd>& predicted, const Eigen::Ref<const Eigen::ArrayXd>& target,
                double gamma, double exp_cap) {
  check_inputs(predicted, target, gamma);
  const Eigen::ArrayXd err = target - predicted;
  const Eigen::ArrayXd expo = capped_exp(-(target * predicted), exp_cap);
  return (gamma * err.square() + (1.0 - gamma) * expo).mean();
}

Eigen::ArrayXd cme_loss_gradient(const Eigen::Ref<const Eigen::ArrayXd>& predicted,
                                 const Eigen::Ref<const Eigen::ArrayXd>& target, double gamma, double exp_cap) {
  check_inputs(predicted, target, gamma);
  const double n = static_cast<double>(predicted.size());
  const Eigen::ArrayXd expo = capped_exp_derivative(-(target * predicted), exp_cap);
  return (-2.0 * gamma * (target - predicted) - (1.0 - gamma) * target * expo) / n;
}

double lambert_w(double z) {
  if (std::isnan(z) || z < 0.0) throw NumericalError("lambert_w: argument must be >= 0");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return z;
  double w = std::log1p(z);
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double fp = ew * (w + 1.0);
    const double step = f / (fp - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double cme_optimal_prediction(double y, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("cme_optimal_prediction: gamma must lie in (0, 1]");
  }
  if (y == 0.0 || gamma == 1.0) return y;
  const double y2 = y * y;
  // (1 - gamma) y^2 / (2 gamma e^{y^2}) evaluated in log space to avoid overflow of e^{y^2}.
  const double log_arg = std::log1p(-gamma) + std::log(y2) - std::log(2.0 * gamma) - y2;
  const double arg = std::exp(log_arg);
  return y + lambert_w(arg) / y;
}

double iou(const Eigen::Ref<const Eigen::ArrayXd>& a, const Eigen::Ref<const Eigen::ArrayXd>& b) {
  if (a.size() != b.size()) throw ConfigError("iou: shape mismatch");
  Eigen::Index inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool sa = a[i] >= 0.0, sb = b[i] >= 0.0;
    inter += sa && sb;
    uni += sa || sb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace rntc
