#pragma once

#include <stdexcept>
#include <string>

namespace memkit {

// Incompatible tensor or buffer shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the documented domain of a function.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or a numerically impossible request.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Request exceeds a configured size or work guard.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint written by an incompatible format or configuration.
struct VersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace memkit
