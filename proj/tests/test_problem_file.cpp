#include <doctest.h>

#include "quadratura/parse.hpp"
#include "quadratura/problem_file.hpp"

using namespace quadratura;

TEST_CASE("a complete problem file") {
  const auto pf = parse_problem(R"(
# comment
[tolerances]
ode_tol = 1e-11
seed = 7

[box]
lo = -1
hi = 1.5

[system s]
x0 = 0
interval = 0, 2
phi1 = 1
phi2 = x*exp(u1)   # trailing comment
breakpoints = 1

[integral f]
system = s
F = exp(-v1)*v2

[linear lin]
p = 1
q = x
x0 = 0
interval = 0, 2
y0 = 0.5

[secondorder osc]
Q = 4
x0 = 0
interval = 0, 3
)");
  CHECK(pf.has_tolerances);
  CHECK(pf.has_seed);
  CHECK(pf.tolerances.ode_tol == 1e-11);
  CHECK(pf.tolerances.seed == 7);
  CHECK(pf.tolerances.constancy_tol == ToleranceConfig{}.constancy_tol);
  REQUIRE(pf.box);
  CHECK(pf.box->hi == 1.5);
  const auto& s = pf.systems.at("s");
  CHECK(s.size() == 2);
  CHECK(s.breakpoints() == std::vector<double>{1.0});
  const auto& f = pf.integrals.at("f");
  CHECK(f.F == parse_expr("exp(-v1)*v2"));
  CHECK(f.theta == var("w"));
  CHECK(pf.linears.at("lin").y0 == 0.5);
  CHECK(pf.secondorders.at("osc").u0 == 0.0);
  CHECK(pf.secondorders.at("osc").du0 == 1.0);
}

TEST_CASE("same name in different section kinds") {
  const auto pf = parse_problem("[system a]\nx0=0\ninterval=0,1\nphi1=1\n[integral a]\nsystem=a\nF=v1\n");
  CHECK(pf.integrals.count("a") == 1);
}

TEST_CASE("problem file errors name the line") {
  auto fails = [](const char* text, const char* fragment) {
    try {
      parse_problem(text);
    } catch (const ProblemError& e) {
      return std::string(e.what()).find(fragment) != std::string::npos;
    }
    return false;
  };
  CHECK(fails("[integral f]\nsystem = nowhere\nF = v1\n", "line 2: unknown system"));
  CHECK(fails("[weird x]\n", "line 1: unknown section"));
  CHECK(fails("[system s]\nx0 = 0\ninterval = 0, 1\nphi1 = 1 +\n", "line 4"));
  CHECK(fails("[system s]\nx0 = zero\ninterval = 0, 1\nphi1 = 1\n", "line 2"));
  CHECK(fails("[system s]\nx0 = 0\nphi1 = 1\n", "missing 'interval'"));
  CHECK(fails("[system s]\nx0 = 0\nx0 = 1\n", "line 3: duplicate key"));
  CHECK(fails("[tolerances]\n[tolerances]\n", "line 2: more than one"));
  CHECK(fails("[tolerances]\nspeed = 1\n", "line 2: unknown key"));
  CHECK(fails("[tolerances]\nconstancy_tol = 1e-12\n", "line 1"));
  CHECK(fails("x = 1\n", "line 1: key outside"));
  CHECK(fails("[system s]\nx0 = 0\ninterval = 0, 1\nphi1 = 1\n[system s]\n", "line 5: duplicate section"));
  CHECK(fails("[system s]\nx0 = 0\ninterval = 0, 1\nphi1 = u2\n", "line 1"));
  CHECK(fails("[integral f]\nsystem = s\nF = v2\n[system s]\nx0=0\ninterval=0,1\nphi1=1\n", "line 1"));
  CHECK(fails("[box]\nlo = 1\nhi = 2\n", "line 1"));
  CHECK(fails("[secondorder q]\nQ = 1\nx0 = 0\ninterval = 0, 1\nu0 = 0\ndu0 = 0\n", "must not both vanish"));
}

TEST_CASE("missing files") {
  CHECK_THROWS_AS(load_problem("/nonexistent/problem.qp"), ProblemError);
}
