#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pnorm/instance.hpp"
#include "pnorm/mwu.hpp"
#include "pnorm/prng.hpp"

namespace pnorm {

enum class SparsifierKind { identity, voltage, lewis };

SparsifierKind sparsifier_from_string(const std::string& name);
std::string to_string(SparsifierKind kind);

struct SolveConfig {
  double epsilon = 1e-6;  // target relative accuracy, in (0, 1)
  double kappa0 = 0.0;    // quality bound of the starting point; 0 = use m
  SparsifierKind sparsifier = SparsifierKind::identity;
  MwuConstants mwu;
  long max_outer = 0;  // 0 = derive the budget from the problem size
  std::uint64_t seed = 1;

  // Width of the decision window under the norm reduction; the no-reduction
  // window is fixed at (1/2, 1].
  double reduction_b = 40.0;

  // When finite, the loop stops as soon as
  //   f(x) - oracle_optimum <= epsilon * (f(x0) - oracle_optimum),
  // the certificate used by callers that know the true optimum.
  double oracle_optimum = std::numeric_limits<double>::quiet_NaN();

  // Throw StagnationError when progress dies without that certificate
  // (default: return with stop_reason = "stagnation").
  bool strict_stagnation = false;

  bool collect_trace = false;  // fill SolveReport::iterations
};

// Scalars tying an inner decision solve back to the outer residual problem:
// (a, b) the decision window, (mu1, kappa1) the norm-reduction step scale and
// approximation loss, (mu2, kappa2) the sparsifier's, (kappa3, kappa4) the
// measured quadratic / p-norm energy overshoots of the inner solve. The final
// step is  a / (2 b kappa3 kappa4^{1/(p'-1)}) * mu2 * mu1  times the raw
// inner solution.
struct ReductionFactors {
  double a = 0.5;
  double b = 1.0;
  double mu1 = 1.0;
  double kappa1 = 1.0;
  double mu2 = 1.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
  double kappa4 = 1.0;
};

struct OuterIterationRecord {
  long index = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double chosen_nu = 0.0;  // 0 when the zero step won
  int candidates = 0;      // nonzero candidates evaluated
  long oracle_calls = 0;
  ReductionFactors chosen_factors;
};

struct SolveReport {
  double objective = 0.0;
  double f0 = 0.0;  // objective at the starting point of the main loop
  long outer_iterations = 0;
  long total_oracle_calls = 0;
  long nu_candidates_total = 0;
  long budget = 0;
  int schedule_length = 0;
  int homotopy_stages = 0;
  bool converged = false;
  std::string stop_reason;  // "optimal", "stagnation", or "budget"

  // Tally of the per-candidate descent inequality
  //   f(x - delta/p) <= f(x) - res(delta) + 1e-9 (1 + |f(x)|),
  // which holds for every delta, scaled or not.
  long descent_checks = 0;
  long descent_violations = 0;
  double worst_descent_violation = 0.0;

  std::vector<OuterIterationRecord> iterations;  // when collect_trace
};

// ---------------------------------------------------------------------------
// Pieces of the driver, exposed for direct testing.

// Descending candidate optima: f0, f0/2, ... stopping once the next value
// would drop below epsilon * f0 / (kappa * p). Empty when f0 <= 0.
std::vector<double> nu_schedule(double f0, double kappa, double p, double epsilon);

// Exponent reduction for p > ln m: switch the p-norm part to
// p' = max(2, ceil(ln m)) via N' = 2^{-1/p'} (nu/m)^{1/p'-1/p} N, keeping the
// quadratic form intact (the stored factors absorb the exponent change).
// factors are filled for an exact inner solve (beta = 1); the caller divides
// mu1 by the measured beta and multiplies kappa1 by beta^2. applied == false
// means p <= ln m and res is returned untouched.
struct NormReduction {
  ResidualProblem res;
  double p_prime = 2.0;
  ReductionFactors factors;
  bool applied = false;
};
NormReduction reduce_to_logm_norm(const ResidualProblem& res, double nu, int m,
                                  double b_window = 40.0);

// Decision form of a residual problem: minimize the residual's own energy
//   delta^T R delta + ||N delta||_p^p
// subject to A delta = 0 and g^T delta = a * nu, solved by the
// multiplicative-weights solver under the promise that the optimum is at most
// b * nu. kappa3 / kappa4 report the measured energies relative to b * nu,
// clamped to >= 1. degenerate flags g = 0 (the window constraint cannot be
// met) or a non-finite solution; such candidates are skipped.
struct DecisionSolve {
  VectorXd delta;
  double kappa3 = 1.0;
  double kappa4 = 1.0;
  bool degenerate = false;
  bool width_budget_exceeded = false;
  long oracle_calls = 0;
  double feas_error = 0.0;
};
DecisionSolve solve_decision_form(const ResidualProblem& res, double nu, double a,
                                  double b, const SparseMatrix& a_mat,
                                  const MwuOptions& opt = {});

// a / (2 b kappa3 kappa4^{1/(p'-1)}) * mu2 * mu1 * delta.
VectorXd decision_scale(const VectorXd& delta, const ReductionFactors& f,
                        double p_prime);

// Index of the candidate minimizing f(x - delta/p); ties go to the earliest.
// Callers append the zero vector so a no-op step is always available.
int select_best_step(const std::vector<VectorXd>& candidates,
                     const PNormProblem& prob, const VectorXd& x,
                     double* best_objective = nullptr);

// Everything the sparsifier dispatch needs besides the residual itself: the
// graph when the residual's matrices are row-scaled incidence matrices (the
// voltage path), nothing otherwise.
struct SparsifyContext {
  const Graph* graph = nullptr;
};

// identity: the residual unchanged, (mu2, kappa2) = (1, 1).
// voltage:  spanner + effective-resistance sampling of the residual's edge
//           weights; requires ctx.graph. mu2 = m^{-1/(p-1)},
//           kappa2 = m^{1/(p-1)} (2k - 1).
// lewis:    row sampling of (factor, N) by mixed Lewis weights; needs the
//           residual exponent in [2, 4). mu2 = 1, kappa2 = 256.
// The sparsified residual stores its whole quadratic form in the m slot
// (dn = 0) so downstream code needs no special cases.
struct SparsifiedResidual {
  ResidualProblem res;
  double mu2 = 1.0;
  double kappa2 = 1.0;
};
SparsifiedResidual dispatch_sparsify(const ResidualProblem& res, SparsifierKind kind,
                                     const SparsifyContext& ctx, Rng& rng);

// Feasible starting point: the exact p = 2 solution, then one constant-
// accuracy refinement pass per homotopy stage p_k = min(2^{k+1}, p) up to and
// including p. stages_out (optional) receives the stage count.
VectorXd homotopy_init(const PNormProblem& prob, const SolveConfig& cfg,
                       int* stages_out = nullptr);

// The full driver: homotopy start, then outer refinement sweeps until the
// accuracy certificate fires, progress stalls, or the budget runs out.
std::pair<VectorXd, SolveReport> solve_pnorm(const PNormProblem& prob,
                                             const SolveConfig& cfg);

// Graph-shaped entry points. Flow solves over edge flows (voltage
// sparsification does not apply); voltage solves over vertex potentials with
// the graph wired into the sparsifier context.
std::pair<VectorXd, SolveReport> solve_flow(const FlowInstance& inst,
                                            const VertexVector& demands,
                                            const SolveConfig& cfg);
std::pair<VectorXd, SolveReport> solve_voltage(const VoltageInstance& inst,
                                               const SolveConfig& cfg);

}  // namespace pnorm
