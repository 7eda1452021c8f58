#include <doctest.h>

#include <cmath>

#include "quadratura/calculus.hpp"
#include "quadratura/errors.hpp"
#include "quadratura/parse.hpp"
#include "quadratura/reduction.hpp"

using namespace quadratura;

namespace {

QuadratureSystem system(std::vector<const char*> phis) {
  std::vector<Expr> e;
  for (auto p : phis) e.push_back(parse_expr(p));
  return QuadratureSystem(0.0, {0, 2}, std::move(e));
}

QuadratureIntegral integral(std::vector<const char*> phis, const char* F, const char* theta = "w") {
  return {system(std::move(phis)), parse_expr(F), parse_expr(theta)};
}

double gap(const QuadratureIntegral& a, const QuadratureIntegral& b) {
  const ToleranceConfig tol;
  IntegralFamily fa(a), fb(b);
  const auto xs = default_grid(fa);
  const auto sa = WorkingBox::uniform(a.size()).sample(8, 101);
  const auto sb = WorkingBox::uniform(b.size()).sample(8, 102);
  const auto r = check_equivalence(fa, fb, xs, sa, sb, tol);
  return r.equivalent ? r.max_gap : INFINITY;
}

double sampled_gap(const Expr& a, const Expr& b, const std::vector<std::string>& vars) {
  const ToleranceConfig tol;
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) {
    Env env;
    for (const auto& v : vars) env[v] = rng.uniform(-1.5, 1.5);
    worst = std::max(worst, std::abs(eval_expr(a, env, tol) - eval_expr(b, env, tol)));
  }
  return worst;
}

const ReductionOptions opts;

}  // namespace

TEST_CASE("linear PDE by characteristics") {
  auto s = solve_linear_pde(parse_expr("x3*exp(x2)"), {"x1", "x2", "x3"}, cst(1.0), cst(0.0), opts);
  CHECK(s.G == parse_expr("x3*exp(0)"));
  CHECK(sampled_gap(s.transform, parse_expr("exp(x2)*x3"), {"x2", "x3"}) < 1e-10);
  CHECK(s.reconstruction_residual < 1e-10);

  s = solve_linear_pde(parse_expr("x1*x3"), {"x1", "x2", "x3"}, cst(0.0), cst(0.0), opts);
  CHECK(sampled_gap(s.transform, var("x3"), {"x3"}) == 0.0);

  s = solve_linear_pde(parse_expr("x2+x1"), {"x1", "x2"}, cst(0.0), cst(1.0), opts);
  CHECK(sampled_gap(s.transform, parse_expr("x2+x1"), {"x1", "x2"}) < 1e-12);
  CHECK(simplify(s.G) == var("x2"));

  CHECK_THROWS_AS(solve_linear_pde(parse_expr("x1*x2"), {"x1", "x2"}, cst(0.0), cst(1.0), opts),
                  ReductionError);
}

TEST_CASE("absorbing into an integrand") {
  const auto base = system({"1", "0"});
  auto r = absorb_into_integrand(base, cst(0.0), opts);
  CHECK(simplify(r.sys.integrand(1)) == cst(0.0));

  r = absorb_into_integrand(base, var("u1"), opts);
  CHECK(simplify(r.sys.integrand(1)) == cst(1.0));
  CHECK(r.identity_residual < 1e-12);

  r = absorb_into_integrand(base, parse_expr("u1^2"), opts);
  CHECK(r.identity_residual < 1e-7);

  r = absorb_into_integrand(system({"1", "x*exp(u1)"}), parse_expr("sin(u1)"), opts);
  CHECK(r.identity_residual < 1e-7);
  CHECK(r.independence.independent);
}

TEST_CASE("alpha extraction") {
  auto a = extract_alpha(parse_expr("exp(-v1)*v2"), 1, opts);
  CHECK(a.alpha == doctest::Approx(-1.0));
  CHECK(sampled_gap(a.beta, cst(0.0), {"v1"}) == 0.0);

  a = extract_alpha(parse_expr("v1+v2"), 1, opts);
  CHECK(a.alpha == 0.0);
  CHECK(sampled_gap(a.beta, cst(1.0), {"v1"}) == 0.0);

  a = extract_alpha(parse_expr("v1*v2+v3"), 2, opts);
  CHECK(a.alpha == 0.0);
  CHECK(sampled_gap(a.beta, var("v1"), {"v1", "v2"}) == 0.0);

  CHECK_THROWS_WITH_AS(extract_alpha(parse_expr("v1+v2+v2^3"), 1, opts),
                       doctest::Contains("Fundamental-Equality structure absent"), ReductionError);
}

TEST_CASE("step A, eliminating case") {
  const auto inflated = integral({"1", "x^2", "x*exp(u1)"}, "exp(-v1)*v3");
  const auto r = reduce_step_A(inflated, opts);
  REQUIRE(r.reduced);
  CHECK(r.step.rule == rule::kEliminate);
  CHECK(r.reduced->size() == 2);
  CHECK(gap(inflated, *r.reduced) < 1e-6);
  CHECK(gap(*r.reduced, integral({"1", "x*exp(u1)"}, "exp(-v1)*v2")) < 1e-6);

  const auto additive = integral({"cos(x)", "x"}, "v1+v2");
  const auto a = reduce_step_A(additive, opts);
  REQUIRE(a.reduced);
  CHECK(a.reduced->size() == 1);
  CHECK(gap(additive, *a.reduced) < 1e-6);
}

TEST_CASE("step A, exponential case") {
  const auto ex = integral({"1", "x*exp(u1)"}, "exp(-v1)*v2");
  const auto r = reduce_step_A(ex, opts);
  REQUIRE(r.shape);
  CHECK(r.step.rule == rule::kExponential);
  CHECK(r.shape->prefix() == 0);
  CHECK(gap(ex, r.shape->to_integral()) < 1e-6);
}

TEST_CASE("step B removes a prefix quadrature") {
  const auto q = integral({"1", "x-u1", "x^2*exp(-(u2+u1^2/2))"}, "exp(v1^2/2)*exp(v2)*v3");
  const auto a = reduce_step_A(q, opts);
  REQUIRE(a.shape);
  CHECK(a.shape->prefix() == 1);
  const auto b = reduce_step_B(*a.shape, opts);
  CHECK(b.step.rule == rule::kShapeStep);
  CHECK(b.reduced.prefix() == 0);
  CHECK(gap(a.shape->to_integral(), b.reduced.to_integral()) < 1e-6);

  // Dead prefix quadrature
  const auto dead = integral({"x^2", "1", "x*exp(u2)"}, "exp(-v2)*v3");
  const auto d = reduce_step_A(dead, opts);
  REQUIRE(d.shape);
  CHECK(d.shape->prefix() == 1);
  const auto e = reduce_step_B(*d.shape, opts);
  CHECK(gap(dead, e.reduced.to_integral()) < 1e-6);
}

TEST_CASE("full reduction") {
  auto r = reduce_to_normal_form(integral({"1", "x*exp(u1)"}, "exp(-v1)*v2"), opts);
  CHECK(r.trace.rules() == std::vector<std::string>{rule::kExponential, rule::kTerminalTwo});
  CHECK(sampled_gap(r.nf.p, cst(1.0), {"x"}) < 1e-12);
  CHECK(sampled_gap(r.nf.q, var("x"), {"x"}) < 1e-12);
  CHECK(r.equivalence.max_gap < 1e-6);

  r = reduce_to_normal_form(integral({"1", "x^2", "x*exp(u1)"}, "exp(-v1)*v3"), opts);
  CHECK(r.trace.rules() ==
        std::vector<std::string>{rule::kEliminate, rule::kExponential, rule::kTerminalTwo});
  CHECK(r.trace.steps[0].count_before == 3);
  CHECK(r.trace.steps[0].count_after == 2);

  r = reduce_to_normal_form(
      integral({"1", "x-u1", "x^2*exp(-(u2+u1^2/2))"}, "exp(v1^2/2)*exp(v2)*v3"), opts);
  CHECK(r.trace.rules() ==
        std::vector<std::string>{rule::kExponential, rule::kShapeStep, rule::kTerminalTwo});
  CHECK(sampled_gap(r.nf.p, parse_expr("-x"), {"x"}) < 1e-9);
  CHECK(sampled_gap(r.nf.q, parse_expr("x^2"), {"x"}) < 1e-9);

  r = reduce_to_normal_form(integral({"cos(x)"}, "v1^3+v1", "x+w"), opts);
  CHECK(r.trace.rules() == std::vector<std::string>{rule::kTerminalOne});
  CHECK(r.nf.p == cst(0.0));
}

TEST_CASE("quadrature count never increases along a trace") {
  const auto r = reduce_to_normal_form(
      integral({"1", "x-u1", "x^2*exp(-(u2+u1^2/2))"}, "exp(v1^2/2)*exp(v2)*v3"), opts);
  for (const auto& s : r.trace.steps) CHECK(s.count_after <= s.count_before);
  for (std::size_t i = 1; i < r.trace.steps.size(); ++i)
    CHECK(r.trace.steps[i].count_before == r.trace.steps[i - 1].count_after);
}

TEST_CASE("reduction failures carry the partial trace") {
  try {
    reduce_to_normal_form(integral({"1", "x", "x^2"}, "v1+v2+v3+v3^3"), opts);
    FAIL("expected a reduction error");
  } catch (const ReductionError& e) {
    CHECK(std::string(e.what()).find("Fundamental-Equality structure absent") != std::string::npos);
    CHECK(e.trace().steps.empty());
  }
}
