#pragma once

#include <stdexcept>
#include <string>

namespace cliquepart {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad generator or trainer configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Instance data violates an invariant (asymmetry, negative entry, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Mismatched sizes between related objects (partition vs instance, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Partition or cluster breaks the diameter constraint.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

// Action outside the available set.
class IllegalActionError : public Error {
 public:
  using Error::Error;
};

// Replay sequence became illegal at a given position.
class ReplayError : public Error {
 public:
  ReplayError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Problem too large for the requested exact method.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Policy queried on a terminal state.
class NoActionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in a numeric pipeline; message names the offending quantity.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Gap against a zero reference with a nonzero candidate.
class UndefinedGapError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cliquepart
