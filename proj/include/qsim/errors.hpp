#pragma once

#include <stdexcept>
#include <string>

namespace qsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: mismatched dimensions, empty index sets, unknown names.
class UsageError : public Error {
 public:
  using Error::Error;
};

// An input fails the invariants of its domain type.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A composite space exceeds kMaxTotalDim.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// An operation's structural precondition does not hold (e.g. a dyadic not
// aligned with a spectral decomposition).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

// A requested branch has zero weight.
class ImpossibleOutcomeError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsim
