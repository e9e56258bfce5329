#pragma once

#include <stdexcept>
#include <string>

namespace spinarray {

// Precondition violated by the caller (bad sizes, out-of-range values).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A plan or allocation that cannot be realised with the given resources.
class InfeasiblePlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular or ill-conditioned matrices, failed factorizations.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double condition_number = 0.0)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

// Malformed scenario document. Line and column are 1-based; 0 when unknown.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace spinarray
