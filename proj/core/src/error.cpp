#include "rcap/error.hpp"

namespace rcap {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SizingError: return "SizingError";
    case ErrorKind::UnsupportedExponent: return "UnsupportedExponent";
    case ErrorKind::UnsupportedDomain: return "UnsupportedDomain";
    case ErrorKind::InfeasiblePotential: return "InfeasiblePotential";
    case ErrorKind::DegenerateMeasure: return "DegenerateMeasure";
    case ErrorKind::NotBoundary: return "NotBoundary";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::MissingLambda: return "MissingLambda";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::DegenerateTilt: return "DegenerateTilt";
    case ErrorKind::InsufficientHits: return "InsufficientHits";
    case ErrorKind::NonConvergence: return "NonConvergence";
  }
  return "Error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonConvergence: return 3;
    case ErrorKind::SizingError:
    case ErrorKind::BudgetExceeded: return 4;
    default: return 2;
  }
}

}  // namespace rcap
