#pragma once

#include <stdexcept>
#include <string>

namespace countcos {

/// Invalid or degenerate polygon input, or a clipping result that fails
/// validation.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (joins, domains, file formats).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration. The message may list several problems.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state or an ill-conditioned linear-algebra step.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace countcos
