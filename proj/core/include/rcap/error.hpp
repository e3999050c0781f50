#pragma once

#include <stdexcept>
#include <string>

namespace rcap {

enum class ErrorKind {
  InvalidArgument,
  SizingError,
  UnsupportedExponent,
  UnsupportedDomain,
  InfeasiblePotential,
  DegenerateMeasure,
  NotBoundary,
  BudgetExceeded,
  OutOfRange,
  MissingLambda,
  GeometryError,
  DegenerateTilt,
  InsufficientHits,
  NonConvergence,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code associated with an error kind: 2 validation, 3
/// non-convergence, 4 budget.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rcap
