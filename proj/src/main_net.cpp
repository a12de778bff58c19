#include "rntc/main_net.hpp"

#include <cmath>

namespace rntc {

std::string to_string(HeadMode mode) { return mode == HeadMode::Residual ? "rntc" : "ntc"; }

HeadMode head_mode_from_string(const std::string& name) {
  if (name == "rntc") return HeadMode::Residual;
  if (name == "ntc") return HeadMode::Direct;
  throw ConfigError("unknown model mode '" + name + "' (expected rntc or ntc)");
}

MainNetSpec MainNetSpec::paper() {
  MainNetSpec spec;
  spec.widths = {3, 36, 36, 36, 18, 18, 18, 9, 9, 9, 1};
  spec.hidden = {Activation::Sin,  Activation::Sin,  Activation::Sin,  Activation::Selu, Activation::Selu,
                 Activation::Selu, Activation::Selu, Activation::Selu, Activation::Selu};
  return spec;
}

MainNetSpec MainNetSpec::desk() {
  MainNetSpec spec = paper();
  spec.widths = {3, 18, 18, 18, 9, 9, 9, 5, 5, 5, 1};
  return spec;
}

void MainNetSpec::validate() const {
  if (widths.size() < 2 || widths.front() != 3 || widths.back() != 1) {
    throw ConfigError("main network must map 3 inputs to 1 output");
  }
  if (hidden.size() != widths.size() - 2) {
    throw ConfigError("main network needs one activation per hidden layer");
  }
  for (int w : widths) {
    if (w <= 0) throw ConfigError("main network layer widths must be positive");
  }
}

std::vector<MainNetSpec::Layer> MainNetSpec::layout() const {
  std::vector<Layer> layers;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer{offset, offset + static_cast<Eigen::Index>(widths[l]) * widths[l + 1], widths[l], widths[l + 1]};
    offset = layer.bias_offset + layer.out;
    layers.push_back(layer);
  }
  return layers;
}

Eigen::Index MainNetSpec::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += static_cast<Eigen::Index>(widths[l] + 1) * widths[l + 1];
  return n;
}

double wrap_angle(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

Eigen::Vector3d StateNormalizer::normalize(const Eigen::Vector3d& state) const {
  const double h = 2.0 / window_size;
  return {(state.x() - window_center.x()) * h, (state.y() - window_center.y()) * h,
          wrap_angle(state.z()) / std::numbers::pi};
}

}  // namespace rntc
