#pragma once

#include <utility>
#include <vector>

#include "pnorm/prng.hpp"
#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// tau_i = a_i^T (A^T A)^+ a_i, computed exactly through an eigendecomposition;
// eigenvalues below 1e-10 * sigma_max^2 are treated as rank deficiency.
VectorXd leverage_scores(const MatrixXd& a);

struct LewisResult {
  VectorXd tau;
  double p = 2.0;
  int iterations = 0;
  double fixed_point_residual = 0.0;  // worst relative defect of the identity
  bool converged = true;
};

// Row weights tau with tau_i^{2/p} = a_i^T (A^T diag(tau)^{1-2/p} A)^+ a_i,
// found by fixed-point iteration from the leverage scores. Only p in [2,4) is
// contractive; p = 2 collapses to leverage scores with no iterations. Zero
// rows get weight zero. max_iter <= 0 picks the budget
// 2 ceil(ln(1/tol)) / (1 - |p/2 - 1|).
LewisResult lewis_weights(const MatrixXd& a, double p, int max_iter = 0,
                          double tol = 1e-6);

// Per-row sampling values for the joint l2/lp sampler:
//   nu_i = c * max(tau_c_i * ln n, tau_d_i * n^{p/2-1} * ln n).
VectorXd mixed_sampling_values(const VectorXd& tau_c, const VectorXd& tau_d,
                               int n, double p, double c_const = 8.0);

// Audit record of one sampling run; rows are drawn with replacement with
// probability nu_b / sum(nu), ceil(sum(nu)) times in total.
struct SampledRows {
  std::vector<int> draws;  // original row index per draw
  VectorXd p_scale;        // per draw: nu_b^{-1/p}
  VectorXd r_scale;        // per draw: nu_b^{1/p-1/2}
};

SampledRows draw_rows(const VectorXd& nu, double p, Rng& rng);

// The sampled pair: rows of c scaled by nu_b^{-1/2} (its l2 norm is preserved
// within a factor 2 whp) and rows of d scaled by nu_b^{-1/p} (ditto for the
// p-norm). c and d must have equal row counts, pairing row i with row i.
std::pair<SparseMatrix, SparseMatrix> sample_rows(const SparseMatrix& c,
                                                  const SparseMatrix& d,
                                                  const VectorXd& nu, double p,
                                                  Rng& rng);

// End-to-end sparsifier for the mixed objective |M x|_2^2 + |N x|_p^p: pads
// the shorter matrix with zero rows so rows pair up, computes scores on both
// sides, samples once, and returns the rescaled pair. The mixed objective of
// the output is within a factor 256 of the input's at every x, whp.
std::pair<SparseMatrix, SparseMatrix> sparsify_mixed_problem(
    const SparseMatrix& m, const SparseMatrix& n, double p, Rng& rng,
    double c_const = 8.0);

struct LewisScaling {
  double mu2 = 1.0;
  double kappa2 = 256.0;
};
LewisScaling lewis_scaling();

}  // namespace pnorm
