#pragma once

#include <stdexcept>
#include <string>

namespace misinfo {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation or configuration: unknown kind, empty registry, missing field.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Argument outside a function's mathematical domain (e.g. zeta at s <= 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Estimator could not produce a result (degenerate sample, no eligible users).
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace misinfo
