#ifndef GRIDSITING_ERRORS_H_
#define GRIDSITING_ERRORS_H_

#include <stdexcept>
#include <string>

namespace gridsiting {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed instance text. The message carries line and field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

class DegenerateIntervalError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class InfeasibleNetworkError : public Error {
 public:
  using Error::Error;
};

class NumericalBreakdownError : public Error {
 public:
  using Error::Error;
};

class TooManySitesError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridsiting

#endif  // GRIDSITING_ERRORS_H_
