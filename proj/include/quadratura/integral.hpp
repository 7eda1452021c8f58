#pragma once

#include <span>
#include <string>
#include <vector>

#include "quadratura/eval.hpp"
#include "quadratura/family.hpp"
#include "quadratura/quadrature_system.hpp"

namespace quadratura {

/// Name of the k-th outer-function slot (1-based): v1, v2, ...
std::string v_name(std::size_t k);

/// f(x, c) = theta(x, F(s_1(x)+c_1, ..., s_n(x,c)+c_n)).
///
/// F is an Expr over v1..vn, theta an Expr over x and w.
struct QuadratureIntegral {
  QuadratureSystem sys;
  Expr F;
  Expr theta;

  std::size_t size() const noexcept { return sys.size(); }
  /// Throws PreconditionError when F or theta reference foreign names.
  void validate() const;
};

double eval_integral(const QuadratureIntegral& q, double x, std::span<const double> c,
                     const ToleranceConfig& tol);

/// A QuadratureIntegral as a Family. Parameter gradients use the chain rule
/// through symbolic partials of theta and F and the variational equations
/// of the system.
class IntegralFamily final : public Family {
 public:
  explicit IntegralFamily(QuadratureIntegral q);

  std::size_t param_dim() const override { return q_.size(); }
  double base_point() const override { return q_.sys.x0(); }
  Interval interval() const override { return q_.sys.interval(); }
  std::vector<double> values(std::span<const double> xs, std::span<const double> c,
                             const ToleranceConfig& tol) const override;
  std::vector<std::vector<double>> param_gradients(std::span<const double> xs,
                                                   std::span<const double> c,
                                                   const ToleranceConfig& tol) const override;

  const QuadratureIntegral& integral() const noexcept { return q_; }

 private:
  QuadratureIntegral q_;
  CompiledExpr F_, theta_, theta_w_;
  std::vector<CompiledExpr> F_partials_;
};

struct AdmissibilityReport {
  bool admissible = false;
  double min_abs_partial = 0.0;
  bool sign_consistent = true;
  std::size_t samples = 0;
  std::size_t failures = 0;  // evaluation errors on the sampled box
  std::string diagnostic;
};

/// Samples d F / d v_n over the working box; passes when every sample
/// evaluates, the sign never changes, and |d F / d v_n| >= 1e-8.
AdmissibilityReport check_admissible(const Expr& F, std::size_t n, const WorkingBox& box,
                                     const ToleranceConfig& tol);

/// Samples d theta / d w on xs x [w_lo, w_hi] with the same floor.
AdmissibilityReport check_theta(const Expr& theta, std::span<const double> xs, Interval w_range,
                                const ToleranceConfig& tol);

/// Lower bound accepted for "has no zeros" on a sampled box.
inline constexpr double kNonvanishingFloor = 1e-8;

}  // namespace quadratura
