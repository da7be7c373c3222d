#pragma once

#include "pnorm/graph.hpp"
#include "pnorm/kkt.hpp"
#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// min_x  b^T x + ||M x||_2^2 + ||N x||_p^p   s.t.  A x = c.
//
// Sign conventions for the whole toolkit are centralized here:
//  * matrix problems are minimizations as written above;
//  * flow instances carry the maximization objective g^T f - h_p(r, s, f)
//    (see flow_objective); mapping to a matrix problem keeps b = g, so the
//    matrix objective evaluated at f equals -flow_objective at -f;
//  * voltage instances minimize d^T v + ||W^{1/2} B v||_2^2 + ||S B v||_p^p.
struct PNormProblem {
  SparseMatrix a;  // d x n, d may be 0
  SparseMatrix m;  // m2 x n
  SparseMatrix n;  // m1 x n
  VectorXd b;      // n
  VectorXd c;      // d
  double p = 2.0;

  int num_vars() const { return static_cast<int>(b.size()); }
  void validate() const;
};

struct FlowInstance {
  Graph graph;
  EdgeVector gradient;  // g
  EdgeVector r2;        // quadratic coefficients r >= 0
  EdgeVector sp;        // p-th power coefficients s >= 0
  double p = 2.0;

  void validate() const;
};

struct VoltageInstance {
  Graph graph;
  EdgeVector w2;        // l2 conductances w >= 0
  EdgeVector sp;        // lp conductances s >= 0
  VertexVector demands; // must balance per component
  double p = 2.0;

  void validate() const;
};

// h_p(r, s, x) = sum_i r_i x_i^2 + s_i |x_i|^p.
double smoothed_power(const VectorXd& r, const VectorXd& s, const VectorXd& x, double p);

double objective_value(const PNormProblem& prob, const VectorXd& x);

// Maximization-form objective g^T f - h_p(r, s, f).
double flow_objective(const FlowInstance& inst, const EdgeVector& f);

// Matrix forms. Flow: A = B^T, c = demands, M = diag(sqrt(r)), N = diag(s^{1/p}),
// b = g. Voltage: no constraint block, M = diag(sqrt(w)) B, N = diag(s) B,
// b = lifted demands.
PNormProblem as_pnorm_problem(const FlowInstance& inst, const VertexVector& demands);
PNormProblem as_pnorm_problem(const VoltageInstance& inst);

// Local model of the objective around a feasible x, maximized over A delta = 0:
//   res(delta) = g^T delta - delta^T R delta - ||N delta||_p^p
// with g = b/p + (2/p) M^T M x + N^T (|Nx|^{p-2} . Nx)
// and  R = (2/p^2) M^T M + 2 N^T diag(|Nx|^{p-2}) N.
// R is carried by its factors; quad_terms() exposes them for KKT work and
// factor() stacks them into a single F with F^T F = R.
struct ResidualProblem {
  VectorXd g;
  SparseMatrix m;  // shared with the parent problem
  SparseMatrix n;
  VectorXd dn;     // |N x|^{p-2}
  double p = 2.0;
  int dim = 0;

  std::vector<QuadTerm> quad_terms() const;
  double quad_form(const VectorXd& delta) const;   // delta^T R delta
  SparseMatrix factor() const;                     // F = [sqrt(2)/p M; sqrt(2 dn) N]
};

ResidualProblem build_residual(const PNormProblem& prob, const VectorXd& x,
                               double feas_tol = 1e-8);

double residual_value(const ResidualProblem& res, const VectorXd& delta);

// x - delta / p: the update direction contract of the outer loop.
VectorXd refinement_step(const VectorXd& x, const VectorXd& delta, double p);

}  // namespace pnorm
