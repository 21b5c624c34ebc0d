#pragma once

#include <stdexcept>
#include <string>

namespace rpod {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A single projection collapsed the sample (MADN == 0). Callers redraw.
class DegenerateProjection : public Error {
 public:
  DegenerateProjection() : Error("projected sample has zero MADN") {}
};

// Too many consecutive degenerate projections; the data is rank deficient.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

// The sequential test or the sample scan ran past its configured budget.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// The bisection bracket for b could not be made to straddle the target level.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

// Malformed user input (CSV, JSON, flags).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace rpod
