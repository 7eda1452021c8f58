#include <doctest.h>

#include <cmath>
#include <numbers>

#include "quadratura/calculus.hpp"
#include "quadratura/errors.hpp"
#include "quadratura/eval.hpp"
#include "quadratura/parse.hpp"
#include "random_expr.hpp"

using namespace quadratura;

namespace {

ToleranceConfig tight() {
  ToleranceConfig t;
  t.ode_tol = 1e-13;
  return t;
}

double central_difference(const Expr& e, Env env, const std::string& v, const ToleranceConfig& tol) {
  const double h = 1e-5 * std::max(1.0, std::abs(env[v]));
  const double x = env[v];
  env[v] = x + h;
  const double fp = eval_expr(e, env, tol);
  env[v] = x - h;
  const double fm = eval_expr(e, env, tol);
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST_CASE("parse builds the expected trees") {
  CHECK(parse_expr("exp(-c1)*c2") == exp(-var("c1")) * var("c2"));
  CHECK(parse_expr("0") == cst(0.0));
  CHECK(parse_expr("quad(t, 0, c2, sin(t)*exp(c1))") ==
        quad("t", cst(0.0), var("c2"), sin(var("t")) * exp(var("c1"))));
  CHECK(parse_expr("2^3^2") == pow(cst(2.0), Rational(9)));
  CHECK(parse_expr("-x^2") == -pow(var("x"), Rational(2)));
  CHECK(parse_expr("a-b-c") == (var("a") - var("b")) - var("c"));
  CHECK(parse_expr("1.5e-3") == cst(1.5e-3));
  CHECK(parse_expr("x^(1/2)") == pow(var("x"), Rational(1, 2)));
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(parse_expr("x +"), ParseError);
  CHECK_THROWS_AS(parse_expr("foo(x)"), ParseError);
  CHECK_THROWS_AS(parse_expr("exp(x, y)"), ParseError);
  CHECK_THROWS_AS(parse_expr("quad(t, 0, 1)"), ParseError);
  CHECK_THROWS_AS(parse_expr("(x"), ParseError);
  CHECK_THROWS_AS(parse_expr("X"), ParseError);
  CHECK_THROWS_AS(parse_expr("x^y"), ParseError);
  try {
    parse_expr("x + * y");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("print and parse round trip") {
  for (const char* s : {"exp(-c1)*c2", "-(2)", "a/(b*c)", "(a+b)^2", "-x^2", "(-x)^2",
                        "quad(t,0,x,t*exp(c1))", "1e+300", "-0.1-(-0.1)", "x^(-1/3)"}) {
    const Expr e = parse_expr(s);
    CHECK_MESSAGE(parse_expr(e.str()) == e, s);
  }
  CHECK(Expr(-cst(2.0)).str() == "-(2)");
}

TEST_CASE("evaluation") {
  const ToleranceConfig tol;
  CHECK(eval_expr(parse_expr("exp(-c1)*c2"), {{"c1", 0.0}, {"c2", 3.0}}, tol) == 3.0);
  CHECK(eval_expr(parse_expr("quad(t,0,x,1)"), {{"x", 2.5}}, tol) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(eval_expr(parse_expr("quad(t,0,1,exp(t))"), {}, tol) ==
        doctest::Approx(std::numbers::e - 1).epsilon(1e-12));
  CHECK(eval_expr(parse_expr("quad(t,1,0,exp(t))"), {}, tol) ==
        doctest::Approx(1 - std::numbers::e).epsilon(1e-12));
  CHECK_THROWS_AS(eval_expr(parse_expr("log(x)"), {{"x", -1.0}}, tol), EvalError);
  CHECK_THROWS_AS(eval_expr(parse_expr("sqrt(x)"), {{"x", -1.0}}, tol), EvalError);
  CHECK_THROWS_AS(eval_expr(parse_expr("1/x"), {{"x", 0.0}}, tol), EvalError);
  CHECK_THROWS_AS(eval_expr(parse_expr("x+y"), {{"x", 0.0}}, tol), EvalError);
}

TEST_CASE("integral nodes are additive over the range") {
  const ToleranceConfig tol;
  const Expr body = parse_expr("sin(t)*exp(t)+t^2");
  auto integral = [&](double a, double b) {
    return eval_expr(quad("t", cst(a), cst(b), body), {}, tol);
  };
  CHECK(std::abs(integral(0, 2) - integral(0, 0.7) - integral(0.7, 2)) < 2 * tol.ode_tol * 10);
}

TEST_CASE("derivatives") {
  CHECK(diff_expr(parse_expr("exp(-c1)*c2"), "c1") == parse_expr("-exp(-c1)*c2"));
  CHECK(diff_expr(parse_expr("quad(t,0,c2,c1*t)"), "c2") == parse_expr("c1*c2"));
  CHECK(diff_expr(parse_expr("quad(t,0,c2,c1*t)"), "c1") == parse_expr("quad(t,0,c2,t)"));
  const Expr d = diff_expr(parse_expr("quad(t,0,c2,c1*t)"), "c1");
  CHECK(eval_expr(d, {{"c2", 1.3}}, ToleranceConfig{}) == doctest::Approx(1.3 * 1.3 / 2));
  CHECK_THROWS_AS(diff_expr(parse_expr("quad(t,0,1,t)"), "t"), PreconditionError);
}

TEST_CASE("derivatives agree with central differences on random expressions") {
  testing::RandomExprGen gen(7, {"x", "c1", "c2"});
  Rng rng(8);
  const auto tol = tight();
  int checked = 0;
  while (checked < 60) {
    const Expr e = gen.generate(5);
    const Env env{{"x", rng.uniform(-1, 1)}, {"c1", rng.uniform(-1, 1)}, {"c2", rng.uniform(-1, 1)}};
    for (const char* v : {"x", "c1", "c2"}) {
      const double sym = eval_expr(diff_expr(e, v), env, tol);
      const double fd = central_difference(e, env, v, tol);
      CHECK_MESSAGE(std::abs(sym - fd) <= 1e-5 * (1 + std::abs(fd)), (e.str() + " d/d" + v));
    }
    ++checked;
  }
}

TEST_CASE("substitution") {
  const ToleranceConfig tol;
  CHECK(simplify(substitute(parse_expr("exp(-c1)*c2"), {{"c1", cst(0.0)}})) == var("c2"));
  const Expr two_x = substitute(parse_expr("c1+c2"), {{"c1", var("x")}, {"c2", parse_expr("quad(t,0,x,1)")}});
  CHECK(eval_expr(two_x, {{"x", 1.25}}, tol) == doctest::Approx(2.5));
  CHECK(substitute(parse_expr("c*q"), {{"c", parse_expr("cp-c1")}}) == parse_expr("(cp-c1)*q"));
  // simultaneous, not sequential
  CHECK(substitute(parse_expr("a+b"), {{"a", var("b")}, {"b", var("a")}}) == parse_expr("b+a"));
}

TEST_CASE("substitution avoids capture") {
  const Expr e = parse_expr("quad(t,0,x,t*y)");
  CHECK_THROWS_AS(substitute(e, {{"y", var("t")}}), CaptureError);
  const Expr renamed = substitute(e, {{"y", var("t")}}, CapturePolicy::Rename);
  CHECK(renamed.free_variables() == std::set<std::string>{"t", "x"});
  const ToleranceConfig tol;
  CHECK(eval_expr(renamed, {{"x", 2.0}, {"t", 3.0}}, tol) == doctest::Approx(6.0));
  // bound symbols are left alone
  CHECK(substitute(e, {{"t", cst(5.0)}}) == e);
}

TEST_CASE("substitution commutes with evaluation on random instances") {
  testing::RandomExprGen gen(21, {"x", "c1", "c2"});
  testing::RandomExprGen repl(22, {"x", "c2"});
  Rng rng(23);
  const auto tol = tight();
  for (int i = 0; i < 40; ++i) {
    const Expr e = gen.generate(4);
    const Expr r = repl.generate(3);
    Env env{{"x", rng.uniform(-1, 1)}, {"c1", 0.0}, {"c2", rng.uniform(-1, 1)}};
    const double direct = eval_expr(substitute(e, {{"c1", r}}, CapturePolicy::Rename), env, tol);
    env["c1"] = eval_expr(r, env, tol);
    const double staged = eval_expr(e, env, tol);
    CHECK(std::abs(direct - staged) <= 1e-9 * (1 + std::abs(staged)));
  }
}

TEST_CASE("simplify folds identities without reordering") {
  CHECK(simplify(parse_expr("0+x*1")) == var("x"));
  CHECK(simplify(parse_expr("exp(0)*y")) == var("y"));
  CHECK(simplify(parse_expr("quad(t,1,1,t)")) == cst(0.0));
  CHECK(simplify(parse_expr("quad(t,0,x,0)")) == cst(0.0));
  CHECK(simplify(parse_expr("y+x")) == parse_expr("y+x"));
  CHECK(simplify(parse_expr("2*3+x")) == parse_expr("6+x"));
}

TEST_CASE("fresh symbols avoid every name in use") {
  const Expr pool[] = {parse_expr("quad(t,0,x,t1)")};
  CHECK(fresh_symbol(pool) == "t2");
}
