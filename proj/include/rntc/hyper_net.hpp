#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rntc/errors.hpp"

namespace rntc {

/// Valid (unpadded) stride-1 convolution followed by ReLU and 2x2 max-pooling.
struct ConvBlock {
  int out_channels = 0;
  int kernel = 0;
  bool operator==(const ConvBlock&) const = default;
};

/// CNN that maps a stack of SDF rasters to a main-network parameter vector.
struct HyperNetSpec {
  int in_channels = 2;
  int input_size = 100;
  std::vector<ConvBlock> blocks;
  Eigen::Index output_size = 0;

  /// 2->16 k5, 16->32 k5, 32->64 k3, 64->128 k3, flatten 2048, linear to output_size.
  static HyperNetSpec paper(Eigen::Index output_size);
  /// 52 x 52 input, widths {8, 16, 32, 32}; the smallest input for which four such blocks stay valid.
  static HyperNetSpec desk(Eigen::Index output_size);

  struct Shape {
    int channels;
    int size;
  };
  /// Feature-map shapes after each block (input first). Throws ConfigError when a block collapses.
  std::vector<Shape> trace() const;
  Eigen::Index flatten_size() const;

  struct Layout {
    std::vector<Eigen::Index> conv_weight;
    std::vector<Eigen::Index> conv_bias;
    Eigen::Index head_weight = 0;
    Eigen::Index head_bias = 0;
    Eigen::Index total = 0;
  };
  Layout layout() const;
  Eigen::Index parameter_count() const { return layout().total; }
  bool operator==(const HyperNetSpec&) const = default;
};

template <typename Scalar>
class HyperNet {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  /// Channels x (height * width), each row a row-major image.
  using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit HyperNet(HyperNetSpec spec) : spec_(std::move(spec)), layout_(spec_.layout()), shapes_(spec_.trace()) {
    params_ = Vector::Zero(layout_.total);
  }

  const HyperNetSpec& spec() const { return spec_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto fill = [&](Eigen::Index offset, Eigen::Index count, double fan_in) {
      const double bound = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < count; ++i) params_[offset + i] = static_cast<Scalar>(dist(rng));
    };
    int channels = spec_.in_channels;
    for (std::size_t b = 0; b < spec_.blocks.size(); ++b) {
      const auto& block = spec_.blocks[b];
      const double fan_in = static_cast<double>(channels) * block.kernel * block.kernel;
      fill(layout_.conv_weight[b], static_cast<Eigen::Index>(block.out_channels) * channels * block.kernel * block.kernel,
           fan_in);
      fill(layout_.conv_bias[b], block.out_channels, fan_in);
      channels = block.out_channels;
    }
    const double fan_in = static_cast<double>(spec_.flatten_size());
    fill(layout_.head_weight, spec_.output_size * spec_.flatten_size(), fan_in);
    fill(layout_.head_bias, spec_.output_size, fan_in);
  }

  struct BlockCache {
    Tensor cols;                          ///< im2col matrix
    Tensor activated;                     ///< ReLU output before pooling
    std::vector<Eigen::Index> argmax;     ///< pooled index -> flat index into `activated`
  };
  struct Cache {
    std::vector<BlockCache> blocks;
    Vector features;
  };

  /// input: in_channels x (input_size^2). Returns the main-network parameter vector.
  Vector forward(const Tensor& input, Cache* cache = nullptr) const {
    if (input.rows() != spec_.in_channels ||
        input.cols() != static_cast<Eigen::Index>(spec_.input_size) * spec_.input_size) {
      throw ConfigError("hypernetwork input must be " + std::to_string(spec_.in_channels) + " x " +
                        std::to_string(spec_.input_size) + " x " + std::to_string(spec_.input_size));
    }
    Tensor x = input;
    if (cache) cache->blocks.assign(spec_.blocks.size(), {});
    for (std::size_t b = 0; b < spec_.blocks.size(); ++b) {
      const auto& block = spec_.blocks[b];
      const int in_c = shapes_[b].channels, in_s = shapes_[b].size;
      const int conv_s = in_s - block.kernel + 1;
      Tensor cols = im2col(x, in_c, in_s, block.kernel);
      Tensor z = conv_weight(b) * cols;
      z.colwise() += conv_bias(b);
      Tensor activated = z.cwiseMax(Scalar(0));
      std::vector<Eigen::Index> argmax;
      x = max_pool(activated, conv_s, argmax);
      if (cache) {
        cache->blocks[b].cols = std::move(cols);
        cache->blocks[b].activated = std::move(activated);
        cache->blocks[b].argmax = std::move(argmax);
      }
    }
    const Eigen::Map<const Vector> features(x.data(), x.size());
    Vector out = head_weight() * features + head_bias();
    if (cache) cache->features = features;
    return out;
  }

  /// Accumulates dL/dparams given dL/d(output) for the forward pass recorded in `cache`.
  void backward(const Cache& cache, const Vector& grad_out, Eigen::Ref<Vector> grad) const {
    const Eigen::Index F = spec_.flatten_size();
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
        grad.data() + layout_.head_weight, spec_.output_size, F);
    gw.noalias() += grad_out * cache.features.transpose();
    grad.segment(layout_.head_bias, spec_.output_size) += grad_out;
    Vector grad_features = head_weight().transpose() * grad_out;

    const auto& last = shapes_.back();
    Tensor grad_x = Eigen::Map<const Tensor>(grad_features.data(), last.channels,
                                             static_cast<Eigen::Index>(last.size) * last.size);
    for (std::size_t b = spec_.blocks.size(); b-- > 0;) {
      const auto& block = spec_.blocks[b];
      const auto& bc = cache.blocks[b];
      Tensor grad_z = Tensor::Zero(bc.activated.rows(), bc.activated.cols());
      const Eigen::Index pooled = grad_x.cols();
      for (Eigen::Index c = 0; c < grad_x.rows(); ++c) {
        for (Eigen::Index p = 0; p < pooled; ++p) {
          const Eigen::Index src = bc.argmax[c * pooled + p];
          grad_z(c, src) += grad_x(c, p);
        }
      }
      grad_z = (bc.activated.array() > Scalar(0)).select(grad_z, Scalar(0));

      const int in_c = shapes_[b].channels;
      const Eigen::Index kk = static_cast<Eigen::Index>(in_c) * block.kernel * block.kernel;
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gcw(
          grad.data() + layout_.conv_weight[b], block.out_channels, kk);
      gcw.noalias() += grad_z * bc.cols.transpose();
      grad.segment(layout_.conv_bias[b], block.out_channels) += grad_z.rowwise().sum();
      if (b > 0) {
        Tensor grad_cols = conv_weight(b).transpose() * grad_z;
        grad_x = col2im(grad_cols, in_c, shapes_[b].size, block.kernel);
      }
    }
  }

 private:
  using RowMajorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  RowMajorMap conv_weight(std::size_t b) const {
    const int in_c = shapes_[b].channels;
    const auto& block = spec_.blocks[b];
    return RowMajorMap(params_.data() + layout_.conv_weight[b], block.out_channels,
                       static_cast<Eigen::Index>(in_c) * block.kernel * block.kernel);
  }
  Eigen::Map<const Vector> conv_bias(std::size_t b) const {
    return Eigen::Map<const Vector>(params_.data() + layout_.conv_bias[b], spec_.blocks[b].out_channels);
  }
  RowMajorMap head_weight() const {
    return RowMajorMap(params_.data() + layout_.head_weight, spec_.output_size, spec_.flatten_size());
  }
  Eigen::Map<const Vector> head_bias() const {
    return Eigen::Map<const Vector>(params_.data() + layout_.head_bias, spec_.output_size);
  }

  static Tensor im2col(const Tensor& x, int channels, int size, int k) {
    const int out = size - k + 1;
    Tensor cols(static_cast<Eigen::Index>(channels) * k * k, static_cast<Eigen::Index>(out) * out);
    for (int c = 0; c < channels; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
          for (int oy = 0; oy < out; ++oy) {
            cols.row(row).segment(static_cast<Eigen::Index>(oy) * out, out) =
                x.row(c).segment(static_cast<Eigen::Index>(oy + ky) * size + kx, out);
          }
        }
      }
    }
    return cols;
  }

  static Tensor col2im(const Tensor& cols, int channels, int size, int k) {
    const int out = size - k + 1;
    Tensor x = Tensor::Zero(channels, static_cast<Eigen::Index>(size) * size);
    for (int c = 0; c < channels; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
          for (int oy = 0; oy < out; ++oy) {
            x.row(c).segment(static_cast<Eigen::Index>(oy + ky) * size + kx, out) +=
                cols.row(row).segment(static_cast<Eigen::Index>(oy) * out, out);
          }
        }
      }
    }
    return x;
  }

  static Tensor max_pool(const Tensor& x, int size, std::vector<Eigen::Index>& argmax) {
    const int out = size / 2;
    Tensor y(x.rows(), static_cast<Eigen::Index>(out) * out);
    argmax.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
      for (int py = 0; py < out; ++py) {
        for (int px = 0; px < out; ++px) {
          Eigen::Index best = (2 * py) * static_cast<Eigen::Index>(size) + 2 * px;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index idx = (2 * py + dy) * static_cast<Eigen::Index>(size) + 2 * px + dx;
              if (x(c, idx) > x(c, best)) best = idx;
            }
          }
          const Eigen::Index p = static_cast<Eigen::Index>(py) * out + px;
          y(c, p) = x(c, best);
          argmax[static_cast<std::size_t>(c * y.cols() + p)] = best;
        }
      }
    }
    return y;
  }

  HyperNetSpec spec_;
  HyperNetSpec::Layout layout_;
  std::vector<HyperNetSpec::Shape> shapes_;
  Vector params_;
};

}  // namespace rntc
