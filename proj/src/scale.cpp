#include "rntc/scale.hpp"

#include "rntc/errors.hpp"

namespace rntc {

std::string to_string(Scale scale) { return scale == Scale::Paper ? "paper" : "desk"; }

Scale scale_from_string(const std::string& name) {
  if (name == "paper") return Scale::Paper;
  if (name == "desk") return Scale::Desk;
  throw ConfigError("unknown scale '" + name + "' (expected paper or desk)");
}

ScaleProfile scale_profile(Scale scale) {
  ScaleProfile p;
  p.scale = scale;
  if (scale == Scale::Paper) {
    p.grid_n = 100;
    p.grid_ntheta = 30;
    p.sdf_size = 100;
    p.main = MainNetSpec::paper();
    p.hyper = HyperNetSpec::paper(p.main.parameter_count());
  } else {
    p.grid_n = 50;
    p.grid_ntheta = 15;
    p.sdf_size = 52;
    p.main = MainNetSpec::desk();
    p.hyper = HyperNetSpec::desk(p.main.parameter_count());
  }
  return p;
}

}  // namespace rntc
