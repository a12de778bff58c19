#pragma once

#include <stdexcept>
#include <string>

namespace rntc {

/// Invalid configuration: bad grid specs, CFL violations, unknown keys, missing models.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-level failures: unreadable/unwritable paths, corrupt or mismatched containers.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: NaN losses, domain errors.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rntc
