#pragma once

#include <utility>
#include <vector>

#include "pnorm/graph.hpp"
#include "pnorm/instance.hpp"
#include "pnorm/prng.hpp"

namespace pnorm {

// Output of the two-half voltage sparsifier. Kept edges live on the original
// vertex set, so vertex-space solutions transfer back with no index mapping.
// u carries the reweighted quadratic conductances (nonzero only on the
// spectral half), t the untouched p-norm multipliers (nonzero only on the
// spanner half); both are indexed by position in `kept`.
struct SparsifyResult {
  Graph subgraph;
  std::vector<int> kept;  // position -> original edge index, ascending
  EdgeVector u;
  EdgeVector t;
  std::vector<int> spanner_edges;   // original indices chosen by the spanner
  std::vector<int> spectral_edges;  // original indices chosen by sampling
  int stretch = 1;                  // 2k - 1 for the spanner half
};

// Randomized (2k-1)-spanner of the undirected support: returns the kept edge
// indices. Expected size O(k n^{1+1/k}). Lengths must be strictly positive
// and k >= 2.
std::vector<int> baswana_sen_spanner(const Graph& g, const EdgeVector& lengths,
                                     int k, Rng& rng);

// Effective-resistance sampling of a weighted graph. Draws
// ceil(4 n eps^-2 ln(n/delta)) edges with replacement, proportionally to
// w_e * R_eff(e), and accumulates w_e / (draws * prob_e) onto each hit, so the
// Laplacian quadratic form is preserved within (1+eps)^2 with probability
// >= 1 - delta. Returns (kept edge indices, matching accumulated weights).
// Requires eps in (0, 1/2] and w >= 0; zero-weight edges are never kept.
std::pair<std::vector<int>, EdgeVector> spectral_sparsify(
    const Graph& g, const EdgeVector& w, double epsilon, double delta, Rng& rng);

// Full voltage sparsifier: spanner on the edges with s > 0 (lengths 1/s,
// k = max(2, ceil(log2 n))), spectral sampling on the edges with w > 0 at
// eps = 1/2 with half the failure budget each, then the union with
// zero-extended weights.
SparsifyResult spanner_sparsify(const VoltageInstance& inst, double delta, Rng& rng);

// Step scaling the driver applies when solving on the sparsified instance:
// steps shrink by mu2 and the certified approximation loss is kappa2.
struct VoltageScaling {
  double mu2 = 1.0;
  double kappa2 = 1.0;
};
VoltageScaling voltage_scaling(int m, int n, double p);

// (sqrt(U) B_H, T B_H): the quadratic-form factor and the p-norm matrix of the
// kept subgraph.
std::pair<SparseMatrix, SparseMatrix> sparsified_pair(const SparsifyResult& r);

// Smallest k >= 2 with 2^k >= n; the spanner parameter used throughout.
int spanner_k(int n);

}  // namespace pnorm
