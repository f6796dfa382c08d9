#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdeh {

// Invalid user input (tuning parameters, config files, CLI arguments).
// The CLI maps this family to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Runtime failures during numerical work; CLI exit code 2.
class ModelEvalError : public std::runtime_error {
 public:
  explicit ModelEvalError(const std::string& what) : std::runtime_error(what) {}
};

// Positive-definite factorisation failed for a per-block matrix.
class NonPdError : public std::runtime_error {
 public:
  NonPdError(const std::string& what, std::int64_t block)
      : std::runtime_error(what), block(block) {}
  std::int64_t block;
};

// The MCMC target returned -inf at every proposal for too long.
class DegeneratePosteriorError : public std::runtime_error {
 public:
  explicit DegeneratePosteriorError(const std::string& what) : std::runtime_error(what) {}
};

// A simulated path left the admissible region.
class ExplosionError : public std::runtime_error {
 public:
  ExplosionError(const std::string& what, std::int64_t step_index)
      : std::runtime_error(what), step_index(step_index) {}
  std::int64_t step_index;
};

}  // namespace sdeh
