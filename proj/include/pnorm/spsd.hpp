#pragma once

#include <functional>
#include <memory>

#include "pnorm/graph.hpp"
#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

struct SpsdOptions {
  double tol = 1e-10;        // relative residual target
  int max_iter_mult = 20;    // CG iteration cap = mult * dim
  int dense_threshold = 512; // below this dimension, factor densely
};

// Solver for S x = b with S symmetric positive semidefinite. Below the dense
// threshold the matrix is factored once by a symmetric eigendecomposition and
// solves are pseudo-inverse applications (exact on range(S), so singular
// Laplacians are fine). At or above the threshold solves run Jacobi
// preconditioned conjugate gradients against the sparse operator.
//
// A right-hand side outside range(S) (relative residual above tol after the
// solve) raises InfeasibleError.
class SpsdSolver {
 public:
  SpsdSolver(SparseMatrix s, SpsdOptions opt = {});

  VectorXd solve(const VectorXd& rhs) const;
  int dim() const { return s_.rows(); }
  bool dense_path() const { return dense_; }

 private:
  VectorXd solve_cg(const VectorXd& rhs) const;

  SparseMatrix s_;
  SpsdOptions opt_;
  bool dense_ = false;
  Eigen::MatrixXd evec_;
  Eigen::VectorXd inv_eval_;  // zero where the eigenvalue is treated as null
  Eigen::VectorXd diag_;      // Jacobi preconditioner for the CG path
};

// One-shot convenience wrapper.
VectorXd solve_spsd(const SparseMatrix& s, const VectorXd& rhs, const SpsdOptions& opt = {});

// Solve L(g, w) x = rhs with the weighted Laplacian. The right-hand side must
// balance (sum to ~0) on every connected component of the positive-weight
// support; it is exactly mean-centered per component before solving and the
// result is returned mean-centered per component as well.
VertexVector laplacian_solve(const Graph& g, const EdgeVector& w, const VertexVector& rhs,
                             const SpsdOptions& opt = {});

// Orthogonal projection of an edge vector onto the cycle space of g (the null
// space of B^T): returns ghat = grad - B psi with psi = L^+ B^T grad, so that
// B^T ghat = 0 and grad = ghat + B psi.
EdgeVector project_cycle_space(const Graph& g, const EdgeVector& grad, const SpsdOptions& opt = {});

}  // namespace pnorm
