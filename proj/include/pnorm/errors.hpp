#pragma once

#include <stdexcept>
#include <string>

namespace pnorm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input: dimension mismatch, self-loop, negative weight, bad p, ...
struct InvalidInputError : Error {
  using Error::Error;
};

// Right-hand side outside the range of the operator (or demands that do not
// balance per component).
struct InfeasibleError : Error {
  using Error::Error;
};

// Iterative method failed to reach its tolerance within its budget.
struct SolverFailureError : Error {
  using Error::Error;
};

struct UnsupportedPError : Error {
  using Error::Error;
};

// Flow instance contains an untouched cycle with nonzero gradient sum; the
// objective is unbounded along that cycle.
struct UnboundedInstanceError : Error {
  using Error::Error;
};

// The zero-resistance bucket of a flow instance contains a cycle, i.e. the
// instance is not cycle-touched where it must be.
struct AcyclicityError : Error {
  using Error::Error;
};

// Outer refinement made no progress over a full candidate sweep while the
// requested accuracy was not certified.
struct StagnationError : Error {
  using Error::Error;
};

}  // namespace pnorm
