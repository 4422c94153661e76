#pragma once

#include <stdexcept>
#include <string>

namespace tvlab {

// Error taxonomy maps onto process exit codes at the C boundary:
// config -> 2, integrity -> 3, numeric -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rollout state exceeded the overflow guard.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& what, int step_index)
      : NumericError(what), step(step_index) {}
  int step;
};

}  // namespace tvlab
