#pragma once

#include <stdexcept>
#include <string>

namespace rtpt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or configuration value is out of its legal range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A runtime input (image, distribution, record stream) is malformed.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Persisted data (attack cache, record file) fails a consistency check.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Process exit codes used by the CLI. Keep stable: scripts depend on them.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfigError = 2,
  kExitInputError = 3,
  kExitIntegrityError = 4,
};

}  // namespace rtpt
