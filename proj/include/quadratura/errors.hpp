#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quadratura {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed DSL text. position() is the 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Numeric evaluation failure: unbound variable, domain violation, non-convergence.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// A substitution would capture a variable under an integral binder.
class CaptureError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked outside its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace quadratura
