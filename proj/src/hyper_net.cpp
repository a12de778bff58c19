#include "rntc/hyper_net.hpp"

#include <string>

namespace rntc {

HyperNetSpec HyperNetSpec::paper(Eigen::Index output_size) {
  HyperNetSpec spec;
  spec.in_channels = 2;
  spec.input_size = 100;
  spec.blocks = {{16, 5}, {32, 5}, {64, 3}, {128, 3}};
  spec.output_size = output_size;
  return spec;
}

HyperNetSpec HyperNetSpec::desk(Eigen::Index output_size) {
  HyperNetSpec spec;
  spec.in_channels = 2;
  spec.input_size = 52;
  spec.blocks = {{8, 5}, {16, 5}, {32, 3}, {32, 3}};
  spec.output_size = output_size;
  return spec;
}

std::vector<HyperNetSpec::Shape> HyperNetSpec::trace() const {
  if (in_channels <= 0 || input_size <= 0 || output_size <= 0) {
    throw ConfigError("hypernetwork needs positive channels, input size and output size");
  }
  std::vector<Shape> shapes{{in_channels, input_size}};
  for (const auto& block : blocks) {
    if (block.out_channels <= 0 || block.kernel <= 0) throw ConfigError("invalid hypernetwork conv block");
    const int conv = shapes.back().size - block.kernel + 1;
    const int pooled = conv / 2;
    if (conv < 1 || pooled < 1) {
      throw ConfigError("hypernetwork input of size " + std::to_string(input_size) +
                        " collapses before the last conv block");
    }
    shapes.push_back({block.out_channels, pooled});
  }
  return shapes;
}

Eigen::Index HyperNetSpec::flatten_size() const {
  const auto last = trace().back();
  return static_cast<Eigen::Index>(last.channels) * last.size * last.size;
}

HyperNetSpec::Layout HyperNetSpec::layout() const {
  const auto shapes = trace();
  Layout out;
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out.conv_weight.push_back(offset);
    offset += static_cast<Eigen::Index>(blocks[b].out_channels) * shapes[b].channels * blocks[b].kernel *
              blocks[b].kernel;
    out.conv_bias.push_back(offset);
    offset += blocks[b].out_channels;
  }
  out.head_weight = offset;
  offset += output_size * flatten_size();
  out.head_bias = offset;
  offset += output_size;
  out.total = offset;
  return out;
}

}  // namespace rntc
