#include <cmath>

#include "doctest.h"
#include "pnorm/errors.hpp"
#include "pnorm/instance.hpp"
#include "test_support.hpp"

using namespace pnorm;
using testsup::load_fixture;
using testsup::matrix_from_json;
using testsup::vector_from_json;

namespace {

PNormProblem dense_problem(const testsup::json& fx) {
  PNormProblem p;
  p.a = SparseMatrix::from_dense(matrix_from_json(fx.at("a")));
  p.m = SparseMatrix::from_dense(matrix_from_json(fx.at("m")));
  p.n = SparseMatrix::from_dense(matrix_from_json(fx.at("n")));
  p.b = vector_from_json(fx.at("b"));
  p.c = vector_from_json(fx.at("c"));
  p.p = fx.at("p").get<double>();
  return p;
}

FlowInstance flow_from_fixture(const testsup::json& fx) {
  FlowInstance f;
  f.graph = testsup::graph_from_json(fx.at("graph"));
  f.gradient = vector_from_json(fx.at("g"));
  f.r2 = vector_from_json(fx.at("r"));
  f.sp = vector_from_json(fx.at("s"));
  f.p = fx.at("p").get<double>();
  return f;
}

}  // namespace

TEST_CASE("smoothed_power sums quadratic and p-th power pieces") {
  VectorXd r(2), s(2), x(2);
  r << 1.0, 2.0;
  s << 3.0, 0.0;
  x << 1.0, -2.0;
  // 1*1 + 2*4 = 9 from the squares, 3*1 + 0*8 = 3 from the cubes.
  CHECK(smoothed_power(r, s, x, 3.0) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(smoothed_power(r, s, VectorXd::Zero(2), 3.0) == 0.0);
  CHECK_THROWS_AS(smoothed_power(r, s, VectorXd::Zero(3), 3.0), InvalidInputError);
}

TEST_CASE("objective value matches direct arithmetic") {
  const auto fx = load_fixture("instance.json").at("objective5");
  const PNormProblem prob = dense_problem(fx);
  const VectorXd x = vector_from_json(fx.at("x"));
  const double want = fx.at("value").get<double>();
  CHECK(objective_value(prob, x) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("flow objective matches direct arithmetic") {
  const auto fx = load_fixture("instance.json").at("flow_triangle");
  const FlowInstance inst = flow_from_fixture(fx);
  const VectorXd f = vector_from_json(fx.at("f"));
  CHECK(flow_objective(inst, f) ==
        doctest::Approx(fx.at("value").get<double>()).epsilon(1e-12));
  CHECK(flow_objective(inst, VectorXd::Zero(3)) == 0.0);
}

TEST_CASE("matrix view of a flow instance negates the objective") {
  const auto fx = load_fixture("instance.json").at("flow_cross");
  const FlowInstance inst = flow_from_fixture(fx);
  const VectorXd d = vector_from_json(fx.at("demands"));
  const PNormProblem prob = as_pnorm_problem(inst, d);
  const auto& flows = fx.at("flows");
  const auto& values = fx.at("values");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const VectorXd f = vector_from_json(flows[i]);
    const double obj = values[i].get<double>();
    // Maximizing g^T f - h(f) over B^T f = d is minimizing the matrix
    // objective at -f; the demand constraint flips sign with it.
    CHECK(objective_value(prob, -f) == doctest::Approx(-obj).epsilon(1e-11));
    CHECK((prob.a.apply(-f) + d).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("validation rejects malformed pieces") {
  FlowInstance f;
  f.graph = Graph(2, {{0, 1}});
  f.gradient = VectorXd::Zero(1);
  f.r2 = VectorXd::Zero(2);  // wrong length
  f.sp = VectorXd::Zero(1);
  f.p = 2.0;
  CHECK_THROWS_AS(f.validate(), InvalidInputError);
  f.r2 = VectorXd::Zero(1);
  f.p = 1.5;
  CHECK_THROWS_AS(f.validate(), UnsupportedPError);
  f.p = 2.0;
  f.r2[0] = -1.0;
  CHECK_THROWS_AS(f.validate(), InvalidInputError);
  f.r2[0] = 0.0;
  f.validate();

  VoltageInstance v;
  v.graph = Graph(2, {{0, 1}});
  v.w2 = VectorXd::Ones(1);
  v.sp = VectorXd::Ones(1);
  v.demands = VectorXd::Ones(2);  // does not balance
  v.p = 2.0;
  CHECK_THROWS_AS(v.validate(), InfeasibleError);
  v.demands << 1.0, -1.0;
  v.validate();
}

TEST_CASE("voltage objective on a single edge") {
  VoltageInstance v;
  v.graph = Graph(2, {{0, 1}});
  v.w2 = VectorXd::Ones(1);
  v.sp = VectorXd::Zero(1);
  v.demands = VectorXd(2);
  v.demands << 1.0, -1.0;
  v.p = 2.0;
  const PNormProblem prob = as_pnorm_problem(v);
  // With t = v0 - v1 the objective is t + t^2, minimized at t = -1/2.
  VectorXd best(2);
  best << -0.25, 0.25;
  CHECK(objective_value(prob, best) == doctest::Approx(-0.25).epsilon(1e-14));
  VectorXd other(2);
  other << 0.1, -0.1;
  CHECK(objective_value(prob, other) > objective_value(prob, best));
  // Shifting both potentials by a constant changes nothing.
  CHECK(objective_value(prob, best + VectorXd::Constant(2, 3.0)) ==
        doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("residual model value matches dense arithmetic") {
  const auto fx = load_fixture("instance.json").at("residual_eval");
  const PNormProblem prob = dense_problem(fx);
  const VectorXd x = vector_from_json(fx.at("x"));
  const VectorXd delta = vector_from_json(fx.at("delta"));
  const ResidualProblem res = build_residual(prob, x);
  CHECK(residual_value(res, delta) ==
        doctest::Approx(fx.at("res").get<double>()).epsilon(1e-10));
  CHECK(residual_value(res, VectorXd::Zero(x.size())) == 0.0);
  CHECK(objective_value(prob, x) ==
        doctest::Approx(fx.at("f_x").get<double>()).epsilon(1e-12));
}

TEST_CASE("a positive residual certifies descent") {
  const auto fx = load_fixture("instance.json").at("residual_eval");
  const PNormProblem prob = dense_problem(fx);
  const VectorXd x = vector_from_json(fx.at("x"));
  const VectorXd delta = vector_from_json(fx.at("delta"));
  const double res = fx.at("res").get<double>();
  REQUIRE(res > 0.0);
  const VectorXd stepped = refinement_step(x, delta, prob.p);
  CHECK((stepped - (x - delta / prob.p)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(objective_value(prob, stepped) ==
        doctest::Approx(fx.at("f_step").get<double>()).epsilon(1e-12));
  // f(x - delta/p) <= f(x) - res(delta), the contract the outer loop rests on.
  CHECK(objective_value(prob, stepped) <=
        objective_value(prob, x) - res + 1e-9 * (1.0 + std::abs(res)));
}

TEST_CASE("residual factor squares back to the quadratic form") {
  const auto fx = load_fixture("instance.json").at("residual_eval");
  const PNormProblem prob = dense_problem(fx);
  const VectorXd x = vector_from_json(fx.at("x"));
  const ResidualProblem res = build_residual(prob, x);
  const MatrixXd f = res.factor().to_dense();
  const MatrixXd md = prob.m.to_dense();
  const MatrixXd nd = prob.n.to_dense();
  const double p = prob.p;
  const MatrixXd want = (2.0 / (p * p)) * md.transpose() * md +
                        2.0 * nd.transpose() * res.dn.asDiagonal() * nd;
  CHECK((f.transpose() * f - want).norm() < 1e-10 * (1.0 + want.norm()));
  // quad_form agrees with the dense R as well.
  testsup::Rng rng(421);
  for (int s = 0; s < 5; ++s) {
    const VectorXd z = testsup::random_gaussian(static_cast<int>(x.size()), rng);
    CHECK(res.quad_form(z) ==
          doctest::Approx(z.dot(want * z)).epsilon(1e-10));
  }
}

TEST_CASE("residual at a quadratic-only point") {
  // At x = 0 the gradient reduces to b/p and dn vanishes for p > 2.
  PNormProblem prob;
  prob.a = SparseMatrix(0, 3);
  prob.m = SparseMatrix::identity(3);
  prob.n = SparseMatrix::identity(3);
  prob.b = VectorXd::Ones(3);
  prob.c = VectorXd::Zero(0);
  prob.p = 4.0;
  const ResidualProblem res = build_residual(prob, VectorXd::Zero(3));
  CHECK((res.g - VectorXd::Constant(3, 0.25)).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(res.dn.lpNorm<Eigen::Infinity>() == 0.0);
  VectorXd z(3);
  z << 1.0, 2.0, -1.0;
  // Only (2/p^2) ||M z||^2 survives in the quadratic form.
  CHECK(res.quad_form(z) == doctest::Approx(2.0 / 16.0 * 6.0).epsilon(1e-12));
}

TEST_CASE("p = 2 keeps the full p-norm block in the quadratic form") {
  testsup::Rng rng(422);
  PNormProblem prob;
  prob.a = SparseMatrix(0, 4);
  prob.m = SparseMatrix::from_dense(testsup::random_gaussian_matrix(3, 4, rng));
  prob.n = SparseMatrix::from_dense(testsup::random_gaussian_matrix(5, 4, rng));
  prob.b = testsup::random_gaussian(4, rng);
  prob.c = VectorXd::Zero(0);
  prob.p = 2.0;
  const VectorXd x = testsup::random_gaussian(4, rng);
  const ResidualProblem res = build_residual(prob, x);
  // |N x|^{p-2} = 1 entrywise at p = 2.
  CHECK((res.dn - VectorXd::Ones(5)).lpNorm<Eigen::Infinity>() == 0.0);
  const MatrixXd md = prob.m.to_dense(), nd = prob.n.to_dense();
  const MatrixXd want =
      0.5 * md.transpose() * md + 2.0 * nd.transpose() * nd;
  const VectorXd z = testsup::random_gaussian(4, rng);
  CHECK(res.quad_form(z) == doctest::Approx(z.dot(want * z)).epsilon(1e-10));
}

TEST_CASE("infeasible expansion points are rejected") {
  PNormProblem prob;
  prob.a = SparseMatrix::from_dense(MatrixXd::Ones(1, 2));
  prob.m = SparseMatrix::identity(2);
  prob.n = SparseMatrix::identity(2);
  prob.b = VectorXd::Zero(2);
  prob.c = VectorXd::Ones(1);
  prob.p = 3.0;
  VectorXd x(2);
  x << 0.5, 0.5;  // feasible: sums to 1
  build_residual(prob, x);
  x << 1.0, 1.0;  // sums to 2
  CHECK_THROWS_AS(build_residual(prob, x), InfeasibleError);
}
