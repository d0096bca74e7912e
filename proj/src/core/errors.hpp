#pragma once

#include <stdexcept>
#include <string>

namespace psychbench {

// Base class for everything thrown by the engine.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated an API precondition (wrong model kind, empty pattern, ...).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(what) {}
};

// Numeric argument outside the mathematical domain (NaN/inf theta, ...).
class DomainError : public ContractError {
 public:
  explicit DomainError(const std::string& what) : ContractError(what) {}
};

// Input data failed schema or invariant checks.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// An iterative routine failed to converge or produced no usable estimate.
class EstimationError : public Error {
 public:
  EstimationError(const std::string& what, double last_iterate)
      : Error(what), last_iterate_(last_iterate) {}
  explicit EstimationError(const std::string& what) : Error(what) {}
  double last_iterate() const { return last_iterate_; }

 private:
  double last_iterate_ = 0.0;
};

// Filesystem-level failure; message carries the path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace psychbench
