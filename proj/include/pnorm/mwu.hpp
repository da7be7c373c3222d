#pragma once

#include <string>
#include <vector>

#include "pnorm/kkt.hpp"
#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// Leading-constant knobs for the multiplicative-weights parameters. All four
// default to 1; the CLI can override them via --constants.
struct MwuConstants {
  double c_alpha = 1.0;
  double c_beta = 1.0;
  double c_rho = 1.0;
  double c_tau = 1.0;
};

// Parameter block for the width-reduced multiplicative-weights solver on a
// problem whose p-norm part has m1 rows:
//   alpha = c_alpha * p^{-1} m1^{-(p^2-5p+2)/(p(3p-2))}      step size
//   beta  = c_beta  * m1^{(p-2)/(3p-2)}                      resistance cap
//   rho   = c_rho   * m1^{(p^2-4p+2)/(p(3p-2))}              width threshold
//   tau   = c_tau   * m1^{(p-1)(p-2)/(3p-2)}                 lp energy gate
//   T     = ceil(alpha^{-1} m1^{1/p})                        flow-step budget
//   K_max = ceil(2^{-p/(p-2)} rho^2 m1^{2/p} beta^{-2/(p-2)}) width budget
struct MwuParams {
  double p = 2.0;
  int m1 = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  long flow_budget = 0;   // T
  long width_budget = 0;  // K_max

  static MwuParams compute(int m1, double p, const MwuConstants& constants = {});
};

struct MwuTraceRow {
  long step_index = 0;
  bool width_step = false;
  double phi = 0.0;
  double psi = 0.0;
  double np_energy = 0.0;    // ||N delta||_p^p of the oracle solution
  double quad_energy = 0.0;  // delta^T M^T M delta of the oracle solution
  long long wallclock_ns = 0;
};

// Running tally of the potential inequalities. Checks marked "certified" are
// only meaningful when the caller guarantees the scaled optimum is <= 1; they
// are recorded unconditionally but gated by the certified flag when deciding
// pass/fail.
struct MwuInvariantLog {
  long checks = 0;
  long violations = 0;
  double worst_violation = 0.0;  // relative
  std::string first_violation;

  void record(bool ok, double rel, const std::string& what);
};

struct MwuOptions {
  MwuConstants constants;
  bool certified_bound = false;  // caller vouches that the scaled optimum <= 1
  bool record_trace = false;
  double kkt_tol = 1e-9;
  double invariant_slack = 1e-7;
};

struct MwuResult {
  VectorXd x;  // solution of the *unscaled* problem handed to residual_solver
  bool width_budget_exceeded = false;
  bool width_step_stalled = false;  // width step found no edge to touch
  long flow_steps = 0;
  long width_steps = 0;
  long oracle_calls = 0;
  double quad_energy = 0.0;  // x^T M^T M x
  double np_energy = 0.0;    // ||N x||_p^p
  double feas_error = 0.0;
  MwuInvariantLog invariants;
  std::vector<MwuTraceRow> trace;
};

// One oracle call: argmin_{A delta = c} m1^{(p-2)/p} delta^T M^T M delta
//                                      + 3^{-(p-2)} sum_e r_e (N delta)_e^2.
VectorXd oracle_solve(const EqualityQpSolver& kkt, const SparseMatrix& m, const SparseMatrix& n,
                      const VectorXd& c, const VectorXd& r, double p, int m1);

// Scaling that brings an instance with optimum <= nu to optimum <= 1:
// M_scaled = nu^{-(p-2)/(2p)} M, c_scaled = nu^{-1/p} c; multiply the scaled
// solution by descale = nu^{1/p} to go back.
struct UnitScaling {
  SparseMatrix m_scaled;
  VectorXd c_scaled;
  double descale = 1.0;
};
UnitScaling scale_to_unit(const SparseMatrix& m, const VectorXd& c, double nu, double p);

// Width-reduced multiplicative-weights solve of
//   min x^T M^T M x + ||N x||_p^p   s.t.  A x = c
// under the promise that the optimum is <= nu. Returns x with A x = c, with
// x^T M^T M x = O(nu) and ||N x||_p^p = O(3^p nu) when the promise holds; on
// width-budget exhaustion (the signal that nu was too small) the best partial
// iterate is returned with the flag set. p = 2 short-circuits to a single
// KKT solve.
MwuResult residual_solver(const SparseMatrix& a, const SparseMatrix& m, const SparseMatrix& n,
                          const VectorXd& c, double p, double nu, const MwuOptions& opt = {});

double phi_potential(const VectorXd& w, double p);  // ||w||_p^p

// Oracle objective value at the oracle minimizer for resistances r.
double psi_potential(const EqualityQpSolver& kkt, const SparseMatrix& m, const SparseMatrix& n,
                     const VectorXd& c, const VectorXd& r, double p, int m1);

void write_trace_csv(const std::vector<MwuTraceRow>& trace, const std::string& path);

}  // namespace pnorm
