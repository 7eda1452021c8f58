#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "quadratura/errors.hpp"
#include "quadratura/integral.hpp"
#include "quadratura/ode_lab.hpp"

namespace quadratura {

/// Malformed or inconsistent problem file; the message carries the line.
class ProblemError : public Error {
 public:
  using Error::Error;
};

struct LinearProblem {
  LinearFirstOrder eq;
  double y0 = 0.0;
};

struct SecondOrderProblem {
  SecondOrderEq eq;
  double u0 = 0.0;
  double du0 = 1.0;
};

/// Sections of a problem file:
///
///   [system NAME]      x0, interval = lo, hi, phi1 .. phi9, breakpoints = a, b, ...
///   [integral NAME]    system = NAME, F, theta (default w)
///   [linear NAME]      p, q, x0, interval, y0 (default 0), breakpoints
///   [secondorder NAME] Q, x0, interval, u0 (default 0), du0 (default 1), breakpoints
///   [tolerances]       ode_tol, diff_step_scale, constancy_tol, rank_threshold,
///                      equiv_tol, sample_count, seed
///   [box]              lo, hi
///
/// Lines are `key = value`; `#` starts a comment.
struct ProblemFile {
  std::map<std::string, QuadratureSystem> systems;
  std::map<std::string, QuadratureIntegral> integrals;
  std::map<std::string, LinearProblem> linears;
  std::map<std::string, SecondOrderProblem> secondorders;
  ToleranceConfig tolerances;
  bool has_tolerances = false;
  bool has_seed = false;
  std::optional<Interval> box;
};

ProblemFile parse_problem(std::string_view text);
ProblemFile load_problem(const std::string& path);

}  // namespace quadratura
