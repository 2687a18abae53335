#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MissingParameter : public Error {
 public:
  using Error::Error;
};

class RegimeError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class SingularArgument : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Thrown when an adaptive engine cannot reach its tolerance within max_evals.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& msg, double partial_value, double partial_error)
      : Error(msg), partial_value(partial_value), partial_error(partial_error) {}
  double partial_value = 0.0;
  double partial_error = 0.0;
};

class NonFiniteSample : public Error {
 public:
  using Error::Error;
};

class ZeroDensityHit : public Error {
 public:
  using Error::Error;
};

class RegularityError : public Error {
 public:
  using Error::Error;
};

class ZeroConstant : public Error {
 public:
  using Error::Error;
};

class ComparisonViolation : public Error {
 public:
  using Error::Error;
};

class EmptyRegion : public Error {
 public:
  using Error::Error;
};

class ZeroInfimum : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class VerificationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace fpl
