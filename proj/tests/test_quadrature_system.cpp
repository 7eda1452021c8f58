#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "quadratura/errors.hpp"
#include "quadratura/parse.hpp"
#include "quadratura/quadrature_system.hpp"

using namespace quadratura;

namespace {

QuadratureSystem make(std::vector<const char*> phis, Interval I = {0, 2}, double x0 = 0.0) {
  std::vector<Expr> e;
  for (auto p : phis) e.push_back(parse_expr(p));
  return QuadratureSystem(x0, I, std::move(e));
}

double gk(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

}  // namespace

TEST_CASE("running quadratures") {
  const ToleranceConfig tol;
  CHECK(eval_system(make({"1"}), 2.0, {}, tol)[0] == doctest::Approx(2.0).epsilon(1e-12));
  const auto s = eval_system(make({"1", "exp(u1)"}), 1.0, std::vector<double>{0.0}, tol);
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(std::numbers::e - 1).epsilon(1e-9));
  const auto sys = make({"cos(x)", "x*exp(u1)", "u1*u2+1"});
  const std::vector<double> c{0.3, -0.7};
  const auto z = eval_system(sys, 0.0, c, tol);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("joint solve agrees with nested scalar quadrature") {
  const ToleranceConfig tol;
  const auto sys = make({"cos(x)", "x*exp(u1)", "u1*u2+1"});
  const std::vector<double> c{0.3, -0.7};
  auto s1 = [&](double t) { return std::sin(t); };
  auto s2 = [&](double x) { return gk([&](double t) { return t * std::exp(s1(t) + c[0]); }, 0, x); };
  auto s3 = [&](double x) {
    return gk([&](double t) { return (s1(t) + c[0]) * (s2(t) + c[1]) + 1; }, 0, x);
  };
  for (double x : {0.5, 1.3, 2.0}) {
    const auto s = eval_system(sys, x, c, tol);
    CHECK(std::abs(s[0] - s1(x)) < 5 * tol.ode_tol * std::max(1.0, std::abs(s1(x))));
    CHECK(std::abs(s[1] - s2(x)) < 5 * tol.ode_tol * std::max(1.0, std::abs(s2(x))));
    CHECK(std::abs(s[2] - s3(x)) < 5 * tol.ode_tol * std::max(1.0, std::abs(s3(x))));
  }
}

TEST_CASE("component j ignores c_j and later constants") {
  const ToleranceConfig tol;
  const auto sys = make({"1", "x*exp(u1)", "u2*sin(u1)"});
  const auto a = eval_system(sys, 1.5, std::vector<double>{0.2, 0.4}, tol);
  const auto b = eval_system(sys, 1.5, std::vector<double>{0.2, -1.1}, tol);
  CHECK(std::abs(a[0] - b[0]) < 10 * tol.ode_tol);
  CHECK(std::abs(a[1] - b[1]) < 10 * tol.ode_tol * std::abs(a[1]));
  CHECK(std::abs(a[2] - b[2]) > 0.1);
}

TEST_CASE("grid evaluation matches pointwise evaluation") {
  const ToleranceConfig tol;
  const auto sys = make({"1", "x*exp(u1)"});
  const std::vector<double> xs{2.0, 0.0, 0.5, 1.0};
  const std::vector<double> c{0.1};
  const auto grid = eval_system_grid(sys, xs, c, tol);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto s = eval_system(sys, xs[i], c, tol);
    CHECK(grid[i][1] == doctest::Approx(s[1]).epsilon(1e-9));
  }
}

TEST_CASE("sensitivities match finite differences") {
  const ToleranceConfig tol;
  const auto sys = make({"1", "x*exp(u1)", "u2*u1"});
  const std::vector<double> xs{1.7};
  const std::vector<double> c{0.2, 0.3, 0.0};
  const auto sens = eval_system_sensitivity(sys, xs, c, tol);
  for (std::size_t k = 0; k < 2; ++k) {
    auto cp = c, cm = c;
    cp[k] += 1e-5;
    cm[k] -= 1e-5;
    const auto sp = eval_system(sys, 1.7, cp, tol), sm = eval_system(sys, 1.7, cm, tol);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(sens[0].ds[j][k] == doctest::Approx((sp[j] - sm[j]) / 2e-5).epsilon(1e-5));
  }
}

TEST_CASE("construction rejects foreign names and bad intervals") {
  CHECK_THROWS_AS(make({"u1"}), PreconditionError);
  CHECK_THROWS_AS(make({"1", "u2"}), PreconditionError);
  CHECK_THROWS_AS(make({"c1"}), PreconditionError);
  CHECK_THROWS_AS(make({"1"}, {0, 1}, 2.0), PreconditionError);
  CHECK_THROWS_AS(make({"1"}, {1, 1}), PreconditionError);
}

TEST_CASE("independence") {
  const ToleranceConfig tol;
  CHECK_FALSE(check_independence(make({"1", "1"}), 10, tol).independent);
  CHECK(check_independence(make({"1", "x"}, {0, 1}), 10, tol).independent);
  const auto rep = check_independence(make({"1", "x*exp(u1)"}), 10, tol);
  CHECK(rep.independent);
  CHECK(rep.pivot_points.size() == 2);
  CHECK(rep.smallest_singular_value > 0.1);
}

TEST_CASE("invariance probe") {
  const ToleranceConfig tol;
  const std::vector<double> xs{0.5, 1.0, 2.0};
  const std::vector<std::vector<double>> cs{{0.0, 0.0}, {0.5, -0.3}, {-1.0, 1.0}};
  const auto ex = make({"1", "x*exp(u1)"});
  auto r = invariance_probe(parse_expr("5"), ex, xs, cs, tol);
  CHECK(r.probe_deviation == 0.0);
  CHECK(r.spread == 0.0);
  r = invariance_probe(parse_expr("c1"), make({"1"}), xs, std::vector<std::vector<double>>{{0.0}}, tol);
  CHECK(r.probe_deviation == doctest::Approx(2.0));
  r = invariance_probe(parse_expr("c1+c2"), ex, xs, cs, tol);
  CHECK(r.probe_deviation > 0.1);
}
