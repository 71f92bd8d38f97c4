#pragma once

#include <stdexcept>
#include <string>

namespace tmd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// invalid molecular model definition
struct ModelError : Error {
  using Error::Error;
};

// invalid or inconsistent simulation configuration
struct ConfigError : Error {
  using Error::Error;
};

// file system / serialization failures
struct IoError : Error {
  using Error::Error;
};

// non-finite state, overlapping sites, diverged integration
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace tmd
