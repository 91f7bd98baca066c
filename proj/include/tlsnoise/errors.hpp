#pragma once

#include <stdexcept>
#include <string>

namespace tlsnoise {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical or numerical parameter violates its type invariant.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed data handed to an operation (empty series, bad grid, bad band).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A closed-form result was requested outside the regime where it holds.
class OutOfValidity : public Error {
 public:
  using Error::Error;
};

/// Fixed-step integration would run outside its stability bound.
class StabilityViolation : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but the requested quantity is undefined (0/0).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidParameter(what);
}

}  // namespace detail
}  // namespace tlsnoise
