#pragma once

#include <stdexcept>
#include <string>

namespace groundrl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A token id outside [0, V).
class InvalidTokenError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or a precondition on inputs that callers control.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized input (checkpoint, task file, request body).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Task generation cannot satisfy the instance invariants.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Training aborted because parameters left the configured bound.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace groundrl
