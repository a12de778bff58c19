#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rntc/errors.hpp"

namespace rntc {

enum class Activation { Sin, Selu };

/// Output head of the main network.
enum class HeadMode {
  Residual,  ///< ELU + 1, strictly positive residual R (RNTC)
  Direct,    ///< identity, value function estimate (NTC ablation)
};

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& name);

/// Fully connected layer stack; widths include input (3) and output (1).
struct MainNetSpec {
  std::vector<int> widths;
  std::vector<Activation> hidden;

  /// [3, 36, 36, 36, 18, 18, 18, 9, 9, 9, 1], Sin x3 then SELU x6.
  static MainNetSpec paper();
  /// Halved widths [3, 18, 18, 18, 9, 9, 9, 5, 5, 5, 1].
  static MainNetSpec desk();

  struct Layer {
    Eigen::Index weight_offset;  ///< row-major (out x in) block
    Eigen::Index bias_offset;
    int in;
    int out;
  };
  std::vector<Layer> layout() const;
  Eigen::Index parameter_count() const;
  void validate() const;
  bool operator==(const MainNetSpec&) const = default;
};

namespace act {

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

template <typename Scalar>
Scalar apply(Activation a, Scalar x) {
  if (a == Activation::Sin) return std::sin(x);
  return x > Scalar(0) ? Scalar(kSeluLambda) * x : Scalar(kSeluLambda * kSeluAlpha) * (std::exp(x) - Scalar(1));
}

/// Derivative from the pre-activation; SELU uses the right branch at 0.
template <typename Scalar>
Scalar derivative(Activation a, Scalar x) {
  if (a == Activation::Sin) return std::cos(x);
  return x >= Scalar(0) ? Scalar(kSeluLambda) : Scalar(kSeluLambda * kSeluAlpha) * std::exp(x);
}

/// ELU(x) + 1 written as x + 1 / exp(x), floored at the smallest normal so it stays > 0.
template <typename Scalar>
Scalar elu_plus_one(Scalar x) {
  if (x > Scalar(0)) return x + Scalar(1);
  return std::max(std::exp(x), std::numeric_limits<Scalar>::min());
}

/// d/dx (ELU(x) + 1); the x >= 0 branch (slope 1) is used at exactly 0.
template <typename Scalar>
Scalar elu_plus_one_derivative(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) : std::exp(x);
}

}  // namespace act

/// Evaluates a main network whose parameters Theta are supplied per call.
///
/// Theta is laid out layer by layer as a row-major weight block followed by the bias,
/// matching MainNetSpec::layout(). Inputs are normalized states (see StateNormalizer).
template <typename Scalar>
class MainNet {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using VectorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using Input = Eigen::Matrix<Scalar, 3, 1>;
  using Batch = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  MainNet(MainNetSpec spec, HeadMode mode) : spec_(std::move(spec)), mode_(mode), layers_(spec_.layout()) {
    spec_.validate();
  }

  const MainNetSpec& spec() const { return spec_; }
  HeadMode mode() const { return mode_; }
  Eigen::Index parameter_count() const { return spec_.parameter_count(); }

  /// Pre- and post-activation values of every layer, kept for the backward pass.
  struct Cache {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
  };

  /// Network output for each column of `x` (R-hat in residual mode, V-hat in direct mode).
  RowVector forward_batch(std::span<const Scalar> theta, const Batch& x, Cache* cache = nullptr) const {
    check(theta);
    Matrix a = x;
    if (cache) {
      cache->pre.clear();
      cache->post.clear();
      cache->post.push_back(a);
    }
    const std::size_t last = layers_.size() - 1;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = weight(theta, l) * a;
      z.colwise() += bias(theta, l);
      if (cache) cache->pre.push_back(z);
      if (l < last) {
        const Activation f = spec_.hidden[l];
        a = z.unaryExpr([f](Scalar v) { return act::apply(f, v); });
      } else {
        a = mode_ == HeadMode::Residual ? Matrix(z.unaryExpr([](Scalar v) { return act::elu_plus_one(v); })) : z;
      }
      if (cache) cache->post.push_back(a);
    }
    return a.row(0);
  }

  /// Accumulates dL/dTheta into `grad_theta` given dL/d(output) per column.
  /// When `grad_input` is non-null it receives dL/dx (3 x batch).
  void backward_batch(std::span<const Scalar> theta, const Cache& cache, const RowVector& grad_out,
                      Eigen::Ref<Vector> grad_theta, Batch* grad_input = nullptr) const {
    check(theta);
    const std::size_t last = layers_.size() - 1;
    Matrix delta = grad_out;
    if (mode_ == HeadMode::Residual) {
      delta.array() *= cache.pre[last].unaryExpr([](Scalar v) { return act::elu_plus_one_derivative(v); }).array();
    }
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (l < last) {
        const Activation f = spec_.hidden[l];
        delta.array() *= cache.pre[l].unaryExpr([f](Scalar v) { return act::derivative(f, v); }).array();
      }
      const auto& layer = layers_[l];
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
          grad_theta.data() + layer.weight_offset, layer.out, layer.in);
      gw.noalias() += delta * cache.post[l].transpose();
      grad_theta.segment(layer.bias_offset, layer.out) += delta.rowwise().sum();
      if (l > 0 || grad_input) {
        Matrix next = weight(theta, l).transpose() * delta;
        delta = std::move(next);
      }
    }
    if (grad_input) *grad_input = delta;
  }

  Scalar forward(std::span<const Scalar> theta, const Input& x) const {
    return forward_batch(theta, Batch(x))(0);
  }

  /// Exact gradient of forward() w.r.t. the (normalized) input.
  Input grad_input(std::span<const Scalar> theta, const Input& x) const {
    Cache cache;
    forward_batch(theta, Batch(x), &cache);
    Vector scratch = Vector::Zero(parameter_count());
    Batch g;
    backward_batch(theta, cache, RowVector::Ones(1), scratch, &g);
    return g.col(0);
  }

 private:
  void check(std::span<const Scalar> theta) const {
    if (static_cast<Eigen::Index>(theta.size()) != spec_.parameter_count()) {
      throw ConfigError("main network parameter vector has length " + std::to_string(theta.size()) +
                        ", expected " + std::to_string(spec_.parameter_count()));
    }
  }
  RowMajorMap weight(std::span<const Scalar> theta, std::size_t l) const {
    const auto& layer = layers_[l];
    return RowMajorMap(theta.data() + layer.weight_offset, layer.out, layer.in);
  }
  VectorMap bias(std::span<const Scalar> theta, std::size_t l) const {
    const auto& layer = layers_[l];
    return VectorMap(theta.data() + layer.bias_offset, layer.out);
  }

  MainNetSpec spec_;
  HeadMode mode_;
  std::vector<MainNetSpec::Layer> layers_;
};

/// Maps world states to the main-network input box: x, y over the sensing window to
/// [-1, 1], heading wrapped to (-pi, pi] and divided by pi.
struct StateNormalizer {
  Eigen::Vector2d window_center = Eigen::Vector2d::Zero();
  double window_size = 8.0;

  Eigen::Vector3d normalize(const Eigen::Vector3d& state) const;
  /// Diagonal of d(normalized)/d(state) (the heading wrap is locally the identity).
  Eigen::Vector3d scale() const {
    const double h = 2.0 / window_size;
    return {h, h, 1.0 / std::numbers::pi};
  }
};

double wrap_angle(double angle);

}  // namespace rntc
