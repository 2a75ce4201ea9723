#pragma once

#include <stdexcept>
#include <string>

namespace nem {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Sizes of two operands do not agree.
class DimensionError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

// Request exceeds a resource guard (qubit count, basis weight, ...).
class CapabilityError : public Error {
public:
  using Error::Error;
};

// NaN/inf, non-convergence, degenerate model.
class NumericalError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace nem
