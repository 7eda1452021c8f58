#pragma once

#include <optional>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "quadratura/expr.hpp"
#include "quadratura/reduction.hpp"
#include "quadratura/sampling.hpp"
#include "quadratura/tolerance.hpp"

namespace quadratura {

/// y' + p(x) y = q(x) on an interval.
struct LinearFirstOrder {
  Expr p;
  Expr q;
  double x0 = 0.0;
  Interval interval;
  std::vector<double> breakpoints;
};

/// y(x) = exp(-int_x0^x p) * (y0 + int_x0^x q(t) exp(int_x0^t p)), as an Expr over x
/// (and whatever y0 references).
Expr linear_closed_form(const LinearFirstOrder& eq, const Expr& y0);

struct LinearTrajectory {
  std::vector<double> x;
  std::vector<double> y;
  double max_residual = 0.0;  // |y' + p y - q|, y' from the symbolic derivative
};

LinearTrajectory solve_linear_first_order(const LinearFirstOrder& eq, double y0,
                                          std::span<const double> xs, const ToleranceConfig& tol);

/// d1 Phi(x,y) + d2 Phi(x,y) y' = q(x) - p(x) Phi(x,y).
struct TransformedOde {
  Expr Phi;       // over x, y
  Expr p;         // over x
  Expr q;         // over x
  Expr residual;  // over x, y, dy
  Expr slope;     // over x, y: (q - p Phi - d1 Phi) / d2 Phi
};

/// Throws PreconditionError when d2 Phi comes within 1e-8 of zero on
/// samples of x_range x y_range.
TransformedOde make_transformed_ode(const Expr& Phi, const Expr& p, const Expr& q,
                                    Interval x_range, Interval y_range, const ToleranceConfig& tol);

/// Numerical solution of y' = slope(x, y), y(x0) = y0.
std::vector<double> integrate_transformed(const TransformedOde& ode, double x0, double y0,
                                          std::span<const double> xs, const ToleranceConfig& tol);

struct NormalFormResidual {
  double inverse_residual = 0.0;  // max |Phi(x, theta_hat(x, w)) - w|
  double max_residual = 0.0;      // ODE residual along normal-form trajectories
};

/// Checks that the normal form's trajectories x -> theta_hat(x, w(x, C))
/// solve the transformed ODE. Throws PreconditionError when Phi is not the
/// inverse of theta_hat in the second slot.
NormalFormResidual verify_normal_form_solves(const NormalForm& nf, const TransformedOde& ode,
                                             std::span<const double> xs,
                                             std::span<const double> cs,
                                             const ToleranceConfig& tol);

/// The normal form evaluated through the closed-form linear solution.
double eval_normal_form(const NormalForm& nf, double x, double C, const ToleranceConfig& tol);

/// u'' + Q(x) u = 0.
struct SecondOrderEq {
  Expr Q;  // over x
  double x0 = 0.0;
  Interval interval;
  std::vector<double> breakpoints;
};

struct PruferTrajectory {
  double x0 = 0.0;
  double theta0 = 0.0;
  double logrho0 = 0.0;
  std::vector<double> x;
  std::vector<double> theta;
  std::vector<double> logrho;
  std::vector<double> u;
  std::vector<double> du;
};

/// Integrates the angle equation theta' = cos^2 theta + Q sin^2 theta and the
/// amplitude equation (log rho)' = (1 - Q) sin theta cos theta from
/// theta0 = atan2(u0, du0), log rho0 = log(u0^2 + du0^2)/2, and reconstructs
/// (u, u') = rho (sin theta, cos theta). Throws PreconditionError if u0 = du0 = 0.
PruferTrajectory prufer_forward(const SecondOrderEq& eq, double u0, double du0,
                                std::span<const double> xs, const ToleranceConfig& tol);

/// max |u'' + Q u| at `points`, with u'' from a five-point stencil of width h
/// applied to the reconstructed u.
double prufer_reconstruction_residual(const SecondOrderEq& eq, double u0, double du0,
                                      std::span<const double> points, double h,
                                      const ToleranceConfig& tol);

struct WitnessReport {
  bool singular = false;         // denominator vanishes on the traversed angle range
  double max_deviation = 0.0;    // max |Phi(theta(x)) - (x - x0)|
  std::optional<double> closed_form_deviation;  // arctan cross-check, Q > 0 only
  Expr first_integral;           // Phi as an Expr over theta
  std::string diagnostic;
};

/// First integral Phi(theta) = int_theta0^theta dpsi / (cos^2 psi + Q sin^2 psi)
/// for constant Q, compared with x - x0 along the trajectory.
WitnessReport restricted_integrability_witness(double Q, const PruferTrajectory& traj,
                                               const ToleranceConfig& tol);

struct ObstructionReport {
  bool derivable = false;  // Q(x1) != Q(x2)
  double Q1 = 0.0;
  double Q2 = 0.0;
  std::vector<double> determinants;  // one per y pair
  double max_abs_det = 0.0;
  std::optional<double> pointwise_residual;  // with the supplied phi
  std::optional<double> derivative_residual;
  std::string diagnostic;
};

/// Evaluates the obstruction identities for a non-constant Q: the
/// determinant of (sin^2)', (sin^2)'' at the y pairs and, for a candidate
/// diffeomorphism phi over y, the residuals of the identities it would have
/// to satisfy at x1, x2 and the sampled y.
ObstructionReport nonconstancy_obstruction(const SecondOrderEq& eq, double x1, double x2,
                                           std::span<const std::pair<double, double>> y_pairs,
                                           std::span<const double> y_samples,
                                           const std::optional<Expr>& phi,
                                           const ToleranceConfig& tol);

}  // namespace quadratura
