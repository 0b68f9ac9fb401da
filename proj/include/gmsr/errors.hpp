#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gmsr {

// Argument outside the mathematical domain of an operation (negative workload,
// non-positive gradient, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Requested service rate is at or above the curve's supremum.
class SaturationError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Requested gradient exceeds the gradient at zero workload.
class NoSolutionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The fluid problem has no interior feasible point. Carries the ids of a
// frontend subset whose arrivals cannot be absorbed strictly below capacity.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::string> frontends)
      : std::runtime_error(what), frontends_(std::move(frontends)) {}

  const std::vector<std::string>& violating_frontends() const noexcept { return frontends_; }

 private:
  std::vector<std::string> frontends_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : std::runtime_error(what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmsr
