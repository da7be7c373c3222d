#pragma once

#include "pnorm/instance.hpp"

namespace pnorm {

// Reference solvers, deliberately independent of the main pipeline: an
// equality-constrained damped Newton method and a projected-gradient method.
// Both drive the projected gradient to (near) machine precision and exist so
// the fast solver can be judged against ground truth on desk-size problems.

struct NewtonOptions {
  double stationarity_tol = 1e-12;  // on ||P_ker(A) grad|| / (1 + |f|)
  long max_iter = 5000;
  double feas_tol = 1e-9;
};

struct OracleResult {
  VectorXd x;
  double objective = 0.0;
  long iterations = 0;
  double stationarity = 0.0;
  bool converged = false;
};

OracleResult newton_oracle(const PNormProblem& prob, const NewtonOptions& opt = {});

OracleResult projected_gradient_oracle(const PNormProblem& prob, long max_iter = 200000,
                                       double tol = 1e-10);

// Minimum-norm solution of A x = c (feasible starting point); throws
// InfeasibleError when c is outside the range of A.
VectorXd feasible_point(const SparseMatrix& a, const VectorXd& c, double tol = 1e-9);

}  // namespace pnorm
