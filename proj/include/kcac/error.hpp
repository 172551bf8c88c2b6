#pragma once

#include <stdexcept>
#include <string>

namespace kcac {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: config files, CLI arguments, invalid construction values.
// The CLI maps this to exit code 2.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Degenerate geometry (non-positive extents and the like).
struct GeometryError : ConfigError {
  explicit GeometryError(const std::string& msg) : ConfigError(msg) {}
};

// Action vector handed to the environment is malformed (NaN/inf).
struct InvalidActionError : Error {
  explicit InvalidActionError(const std::string& msg) : Error(msg) {}
};

// Parameter blob does not fit the learner it is being loaded into.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

}  // namespace kcac
