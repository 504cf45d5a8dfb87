#pragma once

#include <stdexcept>
#include <string>

namespace linbet {

/// Caller handed us something malformed (non-finite vector, wrong length, odd d, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration that cannot be run (unknown dataset, horizon too short, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant broke. Should not happen for valid inputs.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File could not be written or read back.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace linbet
