#pragma once

#include <stdexcept>
#include <string>

namespace tracepred {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a model invariant (dangling edge,
// duplicate id, unknown test, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad arguments to an operation (empty input, out-of-range ratio, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace tracepred
