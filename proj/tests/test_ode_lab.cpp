#include <doctest.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "quadratura/errors.hpp"
#include "quadratura/ode_lab.hpp"
#include "quadratura/parse.hpp"

using namespace quadratura;

namespace {

LinearFirstOrder linear(const char* p, const char* q) {
  return {parse_expr(p), parse_expr(q), 0.0, {0, 2}, {}};
}

std::vector<double> uniform_grid(double a, double b, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return xs;
}

SecondOrderEq second(const char* Q) { return {parse_expr(Q), 0.0, {0, 2}, {}}; }

}  // namespace

TEST_CASE("first-order linear solutions") {
  const ToleranceConfig tol;
  const auto xs = uniform_grid(0, 2, 21);
  auto t = solve_linear_first_order(linear("0", "1"), 0.0, xs, tol);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(t.y[i] == doctest::Approx(xs[i]).epsilon(1e-12));
  t = solve_linear_first_order(linear("1", "x"), 0.0, xs, tol);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(std::abs(t.y[i] - (xs[i] - 1 + std::exp(-xs[i]))) < 1e-9);
  CHECK(t.max_residual < 10 * tol.ode_tol);
  t = solve_linear_first_order(linear("0", "0"), 2.5, xs, tol);
  for (double y : t.y) CHECK(y == 2.5);
}

TEST_CASE("first-order residual on random smooth coefficients") {
  const ToleranceConfig tol;
  Rng rng(11);
  const auto xs = uniform_grid(0, 2, 17);
  for (int k = 0; k < 10; ++k) {
    const std::string p = format_number(rng.uniform(-1, 1)) + "+" + format_number(rng.uniform(-1, 1)) + "*sin(x)";
    const std::string q = format_number(rng.uniform(-1, 1)) + "*cos(2*x)+" + format_number(rng.uniform(-1, 1)) + "*x";
    const auto t = solve_linear_first_order(linear(p.c_str(), q.c_str()), rng.uniform(-1, 1), xs, tol);
    CHECK(t.max_residual < 10 * tol.ode_tol);
  }
}

TEST_CASE("closed form matches a direct ODE solve") {
  const ToleranceConfig tol;
  const auto eq = linear("cos(x)", "exp(-x)");
  const auto xs = uniform_grid(0, 2, 9);
  const auto t = solve_linear_first_order(eq, 0.7, xs, tol);
  using namespace boost::numeric::odeint;
  double y = 0.7, x = 0.0;
  auto stepper = make_controlled(1e-12, 1e-12, runge_kutta_dopri5<double>());
  for (std::size_t i = 1; i < xs.size(); ++i) {
    integrate_adaptive(stepper, [](const double& yy, double& dy, double xx) {
      dy = std::exp(-xx) - std::cos(xx) * yy;
    }, y, x, xs[i], 1e-3);
    x = xs[i];
    CHECK(std::abs(t.y[i] - y) < 1e-9);
  }
}

TEST_CASE("transformed equations") {
  const ToleranceConfig tol;
  const auto id = make_transformed_ode(parse_expr("y"), parse_expr("1"), parse_expr("x"), {0, 2}, {-2, 2}, tol);
  CHECK(eval_expr(id.slope, {{"x", 1.0}, {"y", 0.5}}, tol) == doctest::Approx(0.5));

  const auto cubic = make_transformed_ode(parse_expr("y^3+y"), cst(0.0), cst(1.0), {0, 2}, {-2, 2}, tol);
  const auto xs = uniform_grid(0, 2, 11);
  const auto ys = integrate_transformed(cubic, 0.0, 0.5, xs, tol);
  const double c0 = 0.5 * 0.5 * 0.5 + 0.5;
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(ys[i] * ys[i] * ys[i] + ys[i] - (xs[i] + c0)) < 1e-8);

  CHECK_THROWS_AS(make_transformed_ode(parse_expr("y^2"), cst(0.0), cst(1.0), {0, 2}, {-2, 2}, tol),
                  PreconditionError);
}

TEST_CASE("normal forms solve their transformed equation") {
  const ToleranceConfig tol;
  const NormalForm nf{cst(1.0), var("x"), var("w"), 0.0, {0, 2}};
  const auto xs = uniform_grid(0, 2, 9);
  const std::vector<double> cs{-1.0, 0.0, 1.5};
  const auto good = make_transformed_ode(var("y"), cst(1.0), var("x"), {0, 2}, {-3, 3}, tol);
  CHECK(verify_normal_form_solves(nf, good, xs, cs, tol).max_residual < 1e-6);

  const NormalForm zero{cst(0.0), cst(0.0), var("w"), 0.0, {0, 2}};
  const auto still = make_transformed_ode(var("y"), cst(0.0), cst(0.0), {0, 2}, {-3, 3}, tol);
  CHECK(verify_normal_form_solves(zero, still, xs, cs, tol).max_residual == 0.0);

  const auto off = make_transformed_ode(var("y"), cst(1.0), parse_expr("x+1"), {0, 2}, {-3, 3}, tol);
  CHECK(verify_normal_form_solves(nf, off, xs, cs, tol).max_residual > 0.5);

  const NormalForm cubed{cst(1.0), var("x"), parse_expr("w^3"), 0.0, {0, 2}};
  CHECK_THROWS_AS(verify_normal_form_solves(cubed, good, xs, cs, tol), PreconditionError);
  CHECK(eval_normal_form(nf, 1.0, 0.0, tol) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("Prufer trajectories") {
  const ToleranceConfig tol;
  const auto xs = uniform_grid(0, 2, 21);
  auto t = prufer_forward(second("1"), 0.3, 0.8, xs, tol);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(t.theta[i] - (t.theta0 + xs[i])) < 1e-8);
    CHECK(std::abs(t.logrho[i] - t.logrho0) < 1e-8);
  }
  t = prufer_forward(second("0"), 0.0, 1.0, xs, tol);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(t.u[i] - xs[i]) < 1e-7);
    CHECK(std::abs(t.du[i] - 1.0) < 1e-7);
  }
  CHECK_THROWS_AS(prufer_forward(second("1"), 0.0, 0.0, xs, tol), PreconditionError);
}

TEST_CASE("Prufer reconstruction and superposition") {
  const ToleranceConfig tol;
  const auto eq = second("x");
  const auto pts = uniform_grid(0.1, 1.9, 10);
  CHECK(prufer_reconstruction_residual(eq, 0.0, 1.0, pts, 1e-3, tol) < 1e-5);

  const auto xs = uniform_grid(0, 2, 11);
  const auto a = prufer_forward(eq, 1.0, 0.0, xs, tol);
  const auto b = prufer_forward(eq, 0.0, 1.0, xs, tol);
  const auto ab = prufer_forward(eq, 2.0, -3.0, xs, tol);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(ab.u[i] - (2 * a.u[i] - 3 * b.u[i])) < 10 * tol.ode_tol * 100);
    CHECK(std::abs(ab.du[i] - (2 * a.du[i] - 3 * b.du[i])) < 10 * tol.ode_tol * 100);
  }
}

TEST_CASE("constant Q witnesses") {
  const ToleranceConfig tol;
  const auto xs = uniform_grid(0, 2, 21);
  for (double Q : {1.0, 4.0, 0.25}) {
    const auto traj = prufer_forward(second(format_number(Q).c_str()), 0.2, 1.0, xs, tol);
    const auto w = restricted_integrability_witness(Q, traj, tol);
    CHECK_FALSE(w.singular);
    CHECK(w.max_deviation < 1e-6);
    REQUIRE(w.closed_form_deviation);
    CHECK(*w.closed_form_deviation < 1e-6);
  }
  // Q = 0 from theta0 = 0 never reaches pi/2: theta' = cos^2 theta
  auto traj = prufer_forward(second("0"), 0.0, 1.0, xs, tol);
  CHECK_FALSE(restricted_integrability_witness(0.0, traj, tol).singular);
  // Q = 0 from theta0 = pi/2 sits on the zero of cos^2
  traj = prufer_forward(second("0"), 1.0, 0.0, xs, tol);
  CHECK(restricted_integrability_witness(0.0, traj, tol).singular);
}

TEST_CASE("non-constant Q obstruction") {
  const ToleranceConfig tol;
  const std::vector<std::pair<double, double>> pairs{{std::numbers::pi / 4, std::numbers::pi / 3}};
  const std::vector<double> ys{0.3, 0.9, 1.4};
  const auto ob = nonconstancy_obstruction(second("x"), 0.0, 1.0, pairs, ys, var("y"), tol);
  CHECK(ob.derivable);
  CHECK(std::abs(ob.determinants[0] + 1.0) < 1e-12);
  REQUIRE(ob.pointwise_residual);
  double expect = 0.0;
  for (double x : {0.0, 1.0})
    for (double y : ys) expect = std::max(expect, std::abs(-2 * std::cos(2 * y) + 2 * x * std::cos(2 * y)));
  CHECK(*ob.pointwise_residual == doctest::Approx(expect).epsilon(1e-10));

  const auto none = nonconstancy_obstruction(second("3"), 0.0, 1.0, pairs, ys, std::nullopt, tol);
  CHECK_FALSE(none.derivable);
  CHECK(none.diagnostic.find("no obstruction derivable") != std::string::npos);
}
