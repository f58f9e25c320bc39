#pragma once

#include <stdexcept>
#include <string>

namespace recsys {

/// Base class for all engine errors. Carries the process exit code used by
/// the command-line front end (0 is reserved for success).
class Error : public std::runtime_error {
public:
  Error(std::string message, int exit_code)
      : std::runtime_error(std::move(message)), exit_code_(exit_code) {}

  int exit_code() const noexcept { return exit_code_; }

private:
  int exit_code_;
};

/// Bad arguments, bad configuration, violated call contracts. Exit code 1.
class UsageError : public Error {
public:
  explicit UsageError(std::string message) : Error(std::move(message), 1) {}
};

/// Problems with input data or persisted artifacts. Exit code 2.
class DataError : public Error {
public:
  explicit DataError(std::string message) : Error(std::move(message), 2) {}
};

/// Numeric failures (singular matrices, undefined densities). Exit code 3.
class NumericError : public Error {
public:
  explicit NumericError(std::string message) : Error(std::move(message), 3) {}
};

}  // namespace recsys
