#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quadratura/errors.hpp"
#include "quadratura/family.hpp"
#include "quadratura/integral.hpp"

namespace quadratura {

/// f^(x, C) = theta_hat(x, exp(-int p) * (int q exp(int p) + C)), integrals from x0.
struct NormalForm {
  Expr p;          // over x
  Expr q;          // over x
  Expr theta_hat;  // over x, w
  double x0 = 0.0;
  Interval interval;
};

/// The normal form as a two-quadrature integral
///   phi1 = -p, phi2 = q*exp(-u1), F = exp(v1)*v2, theta = theta_hat,
/// whose c1 = 0 slice is f^.
QuadratureIntegral normal_form_integral(const NormalForm& nf);
/// One-parameter family C -> f^(., C).
FamilyPtr normal_form_family(const NormalForm& nf);

/// One reduction step as recorded in a trace.
struct TraceStep {
  std::string rule;
  std::size_t count_before = 0;
  std::size_t count_after = 0;
  std::vector<std::pair<std::string, std::string>> objects;  // label, DSL text
  std::vector<std::pair<std::string, double>> residuals;     // label, value
  std::vector<std::string> notes;
};

struct ReductionTrace {
  std::vector<TraceStep> steps;
  std::vector<std::string> rules() const;
};

/// Rule labels used in traces.
namespace rule {
inline constexpr const char* kEliminate = "step-A-case1";    // alpha = 0: drop a quadrature
inline constexpr const char* kExponential = "step-A-case2";  // alpha != 0: exponential shape
inline constexpr const char* kShapeStep = "step-B";          // shrink the exponential shape
inline constexpr const char* kTerminalOne = "terminal-1quad";
inline constexpr const char* kTerminalTwo = "terminal-2quad";
}  // namespace rule

/// A structured failure of the reduction; carries the steps completed so far.
class ReductionError : public Error {
 public:
  explicit ReductionError(const std::string& message, ReductionTrace trace = {})
      : Error(message), trace_(std::move(trace)) {}
  const ReductionTrace& trace() const noexcept { return trace_; }

 private:
  ReductionTrace trace_;
};

/// theta(x, F(v1..vm, exp(v(m+1)) * v(m+2))): the system ends with the
/// designated pair s (index m) and S (index m+1); F is an Expr over
/// v1..v(m+1) whose last slot D receives exp(s+c)*(S+C).
struct ExponentialShapeIntegral {
  QuadratureSystem sys;
  Expr F;
  Expr theta;

  std::size_t prefix() const noexcept { return sys.size() - 2; }
  /// The same family written as a plain QuadratureIntegral.
  QuadratureIntegral to_integral() const;
};

struct ReductionOptions {
  ToleranceConfig tol;
  Interval box{-2.0, 2.0};          // per-coordinate sampling range
  std::size_t grid_points = 33;     // x grid for equivalence checks
  bool check_steps = true;          // per-step equivalence checks
};

struct LinearPdeSolution {
  Expr G;          // H with x_(n-1) -> 0
  Expr transform;  // new last argument, over x1..x(n-1), xn
  double pde_residual = 0.0;
  double reconstruction_residual = 0.0;
};

/// Characteristic solution of 0 = d_(n-1) H - (a*xn + b) * d_n H.
/// `vars` names x1..xn (n >= 2); a and b may depend on x1..x(n-1).
/// H = G(x1..x(n-2), transform) with
///   transform = exp(int_0^x(n-1) a) * xn + int_0^x(n-1) b * exp(int_0^t a).
/// Throws ReductionError when the sampled PDE residual reaches constancy_tol.
LinearPdeSolution solve_linear_pde(const Expr& H, const std::vector<std::string>& vars,
                                   const Expr& a, const Expr& b, const ReductionOptions& opts);

struct AbsorptionResult {
  QuadratureSystem sys;
  double identity_residual = 0.0;  // max |s_k + B(s+c) - (s^_k + B(c))|
  IndependenceReport independence;
};

/// Replaces phi_k (0-based) by phi_k + sum_j dB/du_j * phi_j, where B is an
/// Expr over u1..uk, and verifies the shifted-quadrature identity on samples.
AbsorptionResult absorb_into(const QuadratureSystem& sys, std::size_t k, const Expr& B,
                             const ReductionOptions& opts);
/// absorb_into the last integrand.
AbsorptionResult absorb_into_integrand(const QuadratureSystem& sys, const Expr& B,
                                       const ReductionOptions& opts);

struct AlphaExtraction {
  double alpha = 0.0;
  Expr beta;   // R with the last slot set to 0, over v1..vn
  Expr ratio;  // R = dF/dvn / dF/dv(n+1)
  double constancy_residual = 0.0;
};

/// F is an Expr over v1..v(n+1). Samples d R / d v(n+1) and requires it to
/// be constant; throws ReductionError otherwise.
AlphaExtraction extract_alpha(const Expr& F, std::size_t n, const ReductionOptions& opts);

struct StepAResult {
  std::optional<QuadratureIntegral> reduced;     // alpha = 0
  std::optional<ExponentialShapeIntegral> shape;  // alpha != 0
  TraceStep step;
};

/// First reduction step on an integral with at least two quadratures.
StepAResult reduce_step_A(const QuadratureIntegral& q, const ReductionOptions& opts);

struct StepBResult {
  ExponentialShapeIntegral reduced;
  TraceStep step;
};

/// Removes the last prefix quadrature of an exponential shape (prefix >= 1).
StepBResult reduce_step_B(const ExponentialShapeIntegral& e, const ReductionOptions& opts);

struct ReductionResult {
  NormalForm nf;
  ReductionTrace trace;
  EquivalenceReport equivalence;  // original family vs normal form
};

/// Runs the full reduction; every step is checked for equivalence when
/// opts.check_steps is set. Throws ReductionError with the partial trace.
ReductionResult reduce_to_normal_form(const QuadratureIntegral& q, const ReductionOptions& opts);

}  // namespace quadratura
