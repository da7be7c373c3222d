#pragma once

#include <vector>

#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// One additive piece of a quadratic form: scale * F^T diag(weights) F.
// Quadratics are always carried as factor stacks, never materialized as n x n
// products unless a dense factorization actually needs them.
struct QuadTerm {
  const SparseMatrix* factor = nullptr;
  VectorXd weights;  // per-row, >= 0
  double scale = 1.0;
};

VectorXd quad_apply(const std::vector<QuadTerm>& terms, const VectorXd& x);
double quad_value(const std::vector<QuadTerm>& terms, const VectorXd& x);

// Solves   min_x  x^T Q x + linear^T x   s.t.  A x = c
// with Q = sum of QuadTerms, via the range-space (Schur complement) form of
// the KKT conditions: 2 Q x + linear = A^T y, A x = c. Q gets a relative
// ~1e-12 Tikhonov shift so the Schur complement exists even when Q is only
// semidefinite; two rounds of iterative refinement push the feasibility error
// back to tolerance. When every factor is diagonal (flow-shaped problems) the
// Q solve is a vector divide and the per-call cost is one d x d factorization.
//
// The constraint matrix is fixed at construction so its dense copy is reused
// across repeated solves with changing weights.
class EqualityQpSolver {
 public:
  explicit EqualityQpSolver(const SparseMatrix& a, double tol = 1e-9);

  struct Result {
    VectorXd x;
    VectorXd multipliers;
    double feas_error = 0.0;
  };

  Result solve(const std::vector<QuadTerm>& terms, const VectorXd& linear,
               const VectorXd& c) const;

  int vars() const { return n_; }
  int constraints() const { return d_; }

 private:
  int n_ = 0, d_ = 0;
  double tol_;
  MatrixXd a_dense_;
};

}  // namespace pnorm
