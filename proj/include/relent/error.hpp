#pragma once

#include <stdexcept>
#include <string>

namespace relent {

/// Raised when an input violates a documented precondition (shape, Hermiticity,
/// positivity, ordering).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed configuration documents; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Numerical procedure failed to reach its tolerance within its budget.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double partial)
      : std::runtime_error(what), partial_(partial) {}
  double partial_estimate() const noexcept { return partial_; }

 private:
  double partial_;
};

}  // namespace relent
