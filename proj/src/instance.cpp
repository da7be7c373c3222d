#include "pnorm/instance.hpp"

#include <cmath>

#include "pnorm/errors.hpp"

namespace pnorm {

namespace {

void check_p(double p) {
  if (!(p >= 2.0) || !std::isfinite(p)) throw UnsupportedPError("p must be finite and >= 2");
}

void check_nonneg(const VectorXd& v, const char* what) {
  for (int i = 0; i < v.size(); ++i)
    if (!(v[i] >= 0.0)) throw InvalidInputError(std::string(what) + " must be >= 0");
}

}  // namespace

void PNormProblem::validate() const {
  check_p(p);
  const int nv = num_vars();
  if (m.cols() != nv || n.cols() != nv)
    throw InvalidInputError("PNormProblem: M/N column count != variable count");
  if (a.rows() > 0 && a.cols() != nv)
    throw InvalidInputError("PNormProblem: A column count != variable count");
  if (c.size() != a.rows()) throw InvalidInputError("PNormProblem: c size != A rows");
}

void FlowInstance::validate() const {
  check_p(p);
  const int m = graph.edge_count();
  if (gradient.size() != m || r2.size() != m || sp.size() != m)
    throw InvalidInputError("FlowInstance: edge vector size mismatch");
  check_nonneg(r2, "FlowInstance r");
  check_nonneg(sp, "FlowInstance s");
}

void VoltageInstance::validate() const {
  check_p(p);
  const int m = graph.edge_count();
  if (w2.size() != m || sp.size() != m)
    throw InvalidInputError("VoltageInstance: edge vector size mismatch");
  if (demands.size() != graph.vertex_count())
    throw InvalidInputError("VoltageInstance: demand size mismatch");
  check_nonneg(w2, "VoltageInstance w");
  check_nonneg(sp, "VoltageInstance s");
  // Demands must balance on every component, else the linear term is unbounded
  // below along constant shifts.
  const std::vector<int>& comp = graph.component_ids();
  VectorXd sums = VectorXd::Zero(graph.component_count());
  for (int v = 0; v < graph.vertex_count(); ++v) sums[comp[static_cast<std::size_t>(v)]] += demands[v];
  const double scale = demands.size() > 0 ? 1.0 + demands.cwiseAbs().maxCoeff() : 1.0;
  for (int c = 0; c < graph.component_count(); ++c)
    if (std::abs(sums[c]) > 1e-8 * scale)
      throw InfeasibleError("VoltageInstance: demands do not balance on a component");
}

double smoothed_power(const VectorXd& r, const VectorXd& s, const VectorXd& x, double p) {
  check_p(p);
  if (r.size() != x.size() || s.size() != x.size())
    throw InvalidInputError("smoothed_power: size mismatch");
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i)
    acc += r[i] * x[i] * x[i] + s[i] * std::pow(std::abs(x[i]), p);
  return acc;
}

double objective_value(const PNormProblem& prob, const VectorXd& x) {
  const VectorXd mx = prob.m.apply(x);
  const VectorXd nx = prob.n.apply(x);
  double pterm = 0.0;
  for (int i = 0; i < nx.size(); ++i) pterm += std::pow(std::abs(nx[i]), prob.p);
  return prob.b.dot(x) + mx.squaredNorm() + pterm;
}

double flow_objective(const FlowInstance& inst, const EdgeVector& f) {
  return inst.gradient.dot(f) - smoothed_power(inst.r2, inst.sp, f, inst.p);
}

PNormProblem as_pnorm_problem(const FlowInstance& inst, const VertexVector& demands) {
  inst.validate();
  if (demands.size() != inst.graph.vertex_count())
    throw InvalidInputError("as_pnorm_problem: demand size mismatch");
  PNormProblem prob;
  prob.a = incidence_matrix(inst.graph).transposed();
  prob.c = demands;
  prob.m = SparseMatrix::diagonal(inst.r2.cwiseSqrt());
  VectorXd s_root(inst.sp.size());
  for (int e = 0; e < inst.sp.size(); ++e) s_root[e] = std::pow(inst.sp[e], 1.0 / inst.p);
  prob.n = SparseMatrix::diagonal(s_root);
  prob.b = inst.gradient;
  prob.p = inst.p;
  return prob;
}

PNormProblem as_pnorm_problem(const VoltageInstance& inst) {
  inst.validate();
  PNormProblem prob;
  const SparseMatrix b = incidence_matrix(inst.graph);
  prob.a = SparseMatrix(0, inst.graph.vertex_count());
  prob.c = VectorXd::Zero(0);
  prob.m = b.scaled_rows(inst.w2.cwiseSqrt());
  prob.n = b.scaled_rows(inst.sp);
  prob.b = inst.demands;
  prob.p = inst.p;
  return prob;
}

std::vector<QuadTerm> ResidualProblem::quad_terms() const {
  std::vector<QuadTerm> terms;
  terms.push_back({&m, VectorXd::Ones(m.rows()), 2.0 / (p * p)});
  terms.push_back({&n, 2.0 * dn, 1.0});
  return terms;
}

double ResidualProblem::quad_form(const VectorXd& delta) const {
  return quad_value(quad_terms(), delta);
}

SparseMatrix ResidualProblem::factor() const {
  const SparseMatrix top = m.scaled(std::sqrt(2.0) / p);
  const SparseMatrix bottom = n.scaled_rows((2.0 * dn).cwiseSqrt());
  return SparseMatrix::vstack(top, bottom);
}

ResidualProblem build_residual(const PNormProblem& prob, const VectorXd& x, double feas_tol) {
  prob.validate();
  if (x.size() != prob.num_vars()) throw InvalidInputError("build_residual: x size");
  if (prob.a.rows() > 0) {
    const double defect = (prob.a.apply(x) - prob.c).cwiseAbs().maxCoeff();
    const double scale = prob.c.size() > 0 ? 1.0 + prob.c.cwiseAbs().maxCoeff() : 1.0;
    if (defect > feas_tol * scale)
      throw InfeasibleError("build_residual: x violates A x = c");
  }
  ResidualProblem res;
  res.m = prob.m;
  res.n = prob.n;
  res.p = prob.p;
  res.dim = prob.num_vars();
  const VectorXd nx = prob.n.apply(x);
  res.dn = VectorXd::Zero(nx.size());
  for (int i = 0; i < nx.size(); ++i)
    res.dn[i] = std::pow(std::abs(nx[i]), prob.p - 2.0);
  res.g = prob.b / prob.p + (2.0 / prob.p) * prob.m.apply_transpose(prob.m.apply(x)) +
          prob.n.apply_transpose(res.dn.cwiseProduct(nx));
  return res;
}

double residual_value(const ResidualProblem& res, const VectorXd& delta) {
  const VectorXd nd = res.n.apply(delta);
  double pterm = 0.0;
  for (int i = 0; i < nd.size(); ++i) pterm += std::pow(std::abs(nd[i]), res.p);
  return res.g.dot(delta) - res.quad_form(delta) - pterm;
}

VectorXd refinement_step(const VectorXd& x, const VectorXd& delta, double p) {
  if (x.size() != delta.size()) throw InvalidInputError("refinement_step: size mismatch");
  return x - delta / p;
}

}  // namespace pnorm
