#pragma once

#include <stdexcept>
#include <string>

namespace bgtse {

// Invalid configuration or precondition violation. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File/format problems (WAV, manifest, scene specs).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular solve, degenerate metric input).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bgtse
