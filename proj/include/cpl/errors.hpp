#pragma once

#include <stdexcept>
#include <string>

namespace cpl {

// Bad call: wrong dimension, unoccupied endpoint, box outside window, ...
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Model or ladder parameter outside its admissible range.
struct ParameterError : std::domain_error {
  using std::domain_error::domain_error;
};

// An invariant the construction guarantees was found broken.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Iterative solver did not reach its tolerance.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

}  // namespace cpl
