#pragma once

#include <stdexcept>
#include <string>

namespace hhi {

// Input files that fail to parse (BVH, CSV, manifests, checkpoints).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller asked for something inconsistent (bad shapes, bad flag combos).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN or Inf surfaced inside a numeric pass; message names the operation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble that is not a parse problem (missing dir, short read).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hhi
