#pragma once

#include <string>

#include "rntc/hyper_net.hpp"
#include "rntc/main_net.hpp"

namespace rntc {

enum class Scale { Paper, Desk };

std::string to_string(Scale scale);
Scale scale_from_string(const std::string& name);

/// Everything whose size depends on the scale: HJ grid, SDF raster and both networks.
struct ScaleProfile {
  Scale scale = Scale::Desk;
  int grid_n = 50;       ///< HJ grid cells per (x, y) axis
  int grid_ntheta = 15;  ///< HJ heading cells
  int sdf_size = 52;     ///< hypernetwork raster side
  MainNetSpec main;
  HyperNetSpec hyper;
};

/// paper: 100 x 100 x 30 grid, 100 x 100 rasters, 4519-parameter main net.
/// desk: 50 x 50 x 15 grid, 52 x 52 rasters, halved main net.
ScaleProfile scale_profile(Scale scale);

}  // namespace rntc
