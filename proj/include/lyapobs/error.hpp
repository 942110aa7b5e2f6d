#pragma once

#include <stdexcept>
#include <string>

namespace lyapobs {

// Runtime failures of numerical operations. Violated preconditions are
// reported with std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A symbolic window does not reach far enough for the requested horizon.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// Bundle tracking did not settle; usually means there is no domination.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class InvarianceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A cone field has no cone at a point it is queried on.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Spectrum gaps are below the tracking tolerance.
class GapTooSmallError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyapobs
