#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pnorm/instance.hpp"
#include "pnorm/prng.hpp"
#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// Linear flow transfer certifying "source <= target" in the approximation
// order: for every flow f on the source instance (circulations only when
// cycle_only is set),
//   (1/kappa) (obj_source(f) - delta * |f|_1)  <=  obj_target(map(f) / kappa)
// and map(f) routes the same residues (a circulation maps to a circulation).
struct ApproxMap {
  SparseMatrix map;  // source edge space -> target edge space
  double kappa = 1.0;
  double delta = 0.0;
  bool cycle_only = false;
};

// Chained relation source <= mid <= target: kappas multiply, the second delta
// is amplified by how much the first map can grow l1 mass.
ApproxMap compose(const ApproxMap& first, const ApproxMap& second);

// An untouched cycle (all r = s = 0) whose signed gradient sum is nonzero;
// flows around it improve the objective without bound. Entries are
// (edge index, +-1 for traversal with/against the edge orientation).
using SignedCycle = std::vector<std::pair<int, double>>;

// Depth-first potential assignment over the untouched edges; a back edge whose
// implied potential disagrees exposes the witness cycle. Returns nothing iff
// the objective is bounded.
std::optional<SignedCycle> detect_unbounded(const FlowInstance& inst);

struct ContractionResult {
  FlowInstance inst;         // cycle-touching: untouched components collapsed
  VertexVector demands;      // aggregated onto the surviving vertices
  ApproxMap forward;         // original <= contracted (original flows in)
  ApproxMap backward;        // contracted <= original
  double offset = 0.0;       // obj_original(f) = obj_contracted(fwd f) + offset
  std::vector<int> vertex_image;  // original vertex -> contracted vertex
};

// Collapses every connected component of untouched edges to a single vertex,
// folding the untouched gradients into the survivors. A touched edge with
// both ends inside one component returns as a two-edge path through a fresh
// auxiliary vertex, since self-loops carry no incidence information. For zero
// demands both maps preserve the objective exactly on circulations.
ContractionResult contract_constant_cycles(const FlowInstance& inst,
                                           const VertexVector& demands);

// Every nonzero r and s replaced by the largest power of two below it;
// gradients untouched. The identity map certifies original <= rounded with no
// loss and rounded <= original at kappa = 2.
FlowInstance instance_round(const FlowInstance& inst);

struct BucketedInstance {
  struct Bucket {
    double r_value = 0.0;
    double s_value = 0.0;
    std::vector<int> edges;
  };
  std::vector<Bucket> buckets;  // exact (r, s) keys, ascending, (0,0) excluded
  std::vector<int> untouched;   // the r = s = 0 edges
};

// Splits edges by their exact (r, s) pair. The untouched edges must be
// acyclic, otherwise the instance was not cycle-touching and an
// AcyclicityError is raised.
BucketedInstance bucket_edges(const FlowInstance& inst);

// Concatenates edge lists and attribute vectors over a shared vertex set.
FlowInstance union_instances(const std::vector<FlowInstance>& parts);

struct ApproxCheckReport {
  bool passed = true;
  double worst_violation = 0.0;     // max of lhs - rhs over samples, <= 0 is clean
  double worst_residue_error = 0.0;
  int samples = 0;
  std::vector<std::string> warnings;
};

// Samples flows on the source (circulations when the map is cycle_only) and
// verifies the approximation inequality and residue transfer numerically.
// Out-of-range r/s magnitudes produce warnings, never failures.
ApproxCheckReport check_approx_relation(const FlowInstance& target,
                                        const FlowInstance& source,
                                        const ApproxMap& m, int samples,
                                        Rng& rng, double tol = 1e-7);

// One bucket in, a sparser equivalent out, with certificates both ways.
struct PluginResult {
  FlowInstance sparse;
  ApproxMap to_sparse;
  ApproxMap from_sparse;
};
using ExpanderPlugin = std::function<PluginResult(const FlowInstance&, Rng&)>;

// Default plugin: hands the bucket back untouched with exact certificates.
ExpanderPlugin identity_plugin();

struct PipelineResult {
  FlowInstance sparse;
  VertexVector demands;
  ApproxMap to_sparse;    // original <= sparse, composed across all stages
  ApproxMap from_sparse;  // sparse <= original
  double offset = 0.0;    // objective shift absorbed by contraction
};

// contract -> round -> bucket -> plugin per bucket -> union, with the
// composed certificates. Unbounded instances are rejected up front.
PipelineResult flow_sparsify_pipeline(const FlowInstance& inst,
                                      const VertexVector& demands,
                                      const ExpanderPlugin& plugin, Rng& rng);

}  // namespace pnorm
