#pragma once

#include <cstdint>
#include <string>

#include "pnorm/instance.hpp"
#include "pnorm/prng.hpp"

namespace pnorm {

// Knobs for reproducible random instances. Graph kinds read n as vertex count
// and m as edge count; the matrix kind reads n as variable count and m as the
// row count of each of the two objective matrices.
struct GenOptions {
  std::string kind = "flow";  // flow | voltage | matrix
  int n = 16;
  int m = 32;
  double p = 2.0;
  std::uint64_t seed = 1;

  double w_min = 0.1;  // log-uniform weight range
  double w_max = 10.0;

  // Fraction of edges whose quadratic (resp. p-th power) coefficient is
  // zeroed, for exercising partially-weighted instances.
  double zero_quad_fraction = 0.0;
  double zero_lp_fraction = 0.0;
};

// Exactly one of the three payloads is meaningful, per kind.
struct GeneratedInstance {
  std::string kind;
  FlowInstance flow;
  VertexVector demands;  // flow only
  VoltageInstance voltage;
  PNormProblem matrix;
};

// Connected multigraph: a random recursive spanning tree over a shuffled
// vertex order plus m - (n - 1) uniform extra edges, directions random.
// Requires m >= n - 1.
Graph random_connected_graph(int n, int m, Rng& rng);

// Mean-zero, per-component-balanced demands: about n/4 random source-sink
// pairs each moving one unit from the lower-indexed endpoint to the higher.
VertexVector random_demands(const Graph& g, Rng& rng);

GeneratedInstance generate_instance(const GenOptions& opt);

// The matrix-problem view of whichever payload is active.
PNormProblem as_problem(const GeneratedInstance& inst);

}  // namespace pnorm
