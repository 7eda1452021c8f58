#include "quadratura/ode_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "quadratura/calculus.hpp"
#include "quadratura/errors.hpp"
#include "quadratura/eval.hpp"
#include "quadratura/ode.hpp"

namespace quadratura {

namespace {

const std::vector<std::string> kX{"x"};
const std::vector<std::string> kXY{"x", "y"};
const std::vector<std::string> kXW{"x", "w"};

Expr at(const Expr& e, const std::string& name, const Expr& value) {
  return substitute(e, {{name, value}}, CapturePolicy::Rename);
}

}  // namespace

// ---------------------------------------------------------------- linear first order

Expr linear_closed_form(const LinearFirstOrder& eq, const Expr& y0) {
  const Expr pool[] = {eq.p, eq.q, y0, var("x")};
  const std::string t = fresh_symbol(pool, "t");
  const Expr pool2[] = {eq.p, eq.q, y0, var("x"), var(t)};
  const std::string r = fresh_symbol(pool2, "r");
  const Expr x0 = cst(eq.x0);
  const Expr P = quad(t, x0, var("x"), at(eq.p, "x", var(t)));
  const Expr inner =
      quad(t, x0, var("x"), at(eq.q, "x", var(t)) * exp(quad(r, x0, var(t), at(eq.p, "x", var(r)))));
  return exp(-P) * (y0 + inner);
}

LinearTrajectory solve_linear_first_order(const LinearFirstOrder& eq, double y0,
                                          std::span<const double> xs, const ToleranceConfig& tol) {
  for (double x : xs) {
    if (!eq.interval.contains(x)) throw PreconditionError("grid point outside the interval");
  }
  const Expr y = linear_closed_form(eq, cst(y0));
  const CompiledExpr cy(y, kX), cdy(diff_expr(y, "x"), kX), cp(eq.p, kX), cq(eq.q, kX);
  LinearTrajectory out;
  for (double x : xs) {
    const double args[] = {x};
    const double yv = cy.eval(args, tol.ode_tol);
    const double res = cdy.eval(args, tol.ode_tol) + cp.eval(args, tol.ode_tol) * yv -
                       cq.eval(args, tol.ode_tol);
    out.x.push_back(x);
    out.y.push_back(yv);
    out.max_residual = std::max(out.max_residual, std::fabs(res));
  }
  return out;
}

TransformedOde make_transformed_ode(const Expr& Phi, const Expr& p, const Expr& q,
                                    Interval x_range, Interval y_range, const ToleranceConfig& tol) {
  TransformedOde ode{Phi, p, q, {}, {}};
  const Expr d1 = diff_expr(Phi, "x");
  const Expr d2 = diff_expr(Phi, "y");
  ode.residual = simplify(d1 + d2 * var("dy") - q + p * Phi);
  ode.slope = simplify((q - p * Phi - d1) / d2);

  const CompiledExpr cd2(d2, kXY);
  double lo = std::numeric_limits<double>::infinity();
  bool pos = false, neg = false;
  for (double x : chebyshev_points(x_range, 9)) {
    for (double yv : chebyshev_points(y_range, 17)) {
      const double args[] = {x, yv};
      const double v = cd2.eval(args, tol.ode_tol);
      lo = std::min(lo, std::fabs(v));
      (v > 0 ? pos : neg) = true;
    }
  }
  if (lo < kNonvanishingFloor || (pos && neg)) {
    throw PreconditionError("dPhi/dy vanishes on the sampled box (min |dPhi/dy| = " +
                            format_number(lo) + ")");
  }
  return ode;
}

std::vector<double> integrate_transformed(const TransformedOde& ode, double x0, double y0,
                                          std::span<const double> xs, const ToleranceConfig& tol) {
  const CompiledExpr slope(ode.slope, kXY);
  OdeRhs rhs = [&](const OdeState& y, OdeState& dy, double x) {
    const double args[] = {x, y[0]};
    dy[0] = slope.eval(args, tol.ode_tol);
  };
  const auto states = integrate_at(rhs, x0, OdeState{y0}, xs, {}, tol.ode_tol);
  std::vector<double> out;
  for (const auto& s : states) out.push_back(s[0]);
  return out;
}

NormalFormResidual verify_normal_form_solves(const NormalForm& nf, const TransformedOde& ode,
                                             std::span<const double> xs,
                                             std::span<const double> cs,
                                             const ToleranceConfig& tol) {
  const LinearFirstOrder lin{nf.p, nf.q, nf.x0, nf.interval, {}};
  const Expr w = linear_closed_form(lin, var("cc"));
  const std::vector<std::string> xc{"x", "cc"};
  const CompiledExpr cw(w, xc), cp(nf.p, kX), cq(nf.q, kX);
  const CompiledExpr th(nf.theta_hat, kXW), th_x(diff_expr(nf.theta_hat, "x"), kXW),
      th_w(diff_expr(nf.theta_hat, "w"), kXW);
  const CompiledExpr phi(ode.Phi, kXY);
  const std::vector<std::string> xydy{"x", "y", "dy"};
  const CompiledExpr res(ode.residual, xydy);

  NormalFormResidual out;
  for (double C : cs) {
    for (double x : xs) {
      const double a1[] = {x, C};
      const double wv = cw.eval(a1, tol.ode_tol);
      const double xa[] = {x};
      const double dw = cq.eval(xa, tol.ode_tol) - cp.eval(xa, tol.ode_tol) * wv;
      const double a2[] = {x, wv};
      const double Y = th.eval(a2, tol.ode_tol);
      const double dY = th_x.eval(a2, tol.ode_tol) + th_w.eval(a2, tol.ode_tol) * dw;
      const double a3[] = {x, Y};
      out.inverse_residual =
          std::max(out.inverse_residual, std::fabs(phi.eval(a3, tol.ode_tol) - wv));
      const double a4[] = {x, Y, dY};
      out.max_residual = std::max(out.max_residual, std::fabs(res.eval(a4, tol.ode_tol)));
    }
  }
  if (out.inverse_residual > tol.equiv_tol) {
    throw PreconditionError("Phi is not the inverse of theta_hat in its second slot (residual " +
                            format_number(out.inverse_residual) + ")");
  }
  return out;
}

double eval_normal_form(const NormalForm& nf, double x, double C, const ToleranceConfig& tol) {
  const LinearFirstOrder lin{nf.p, nf.q, nf.x0, nf.interval, {}};
  const double w = eval_expr(linear_closed_form(lin, cst(C)), {{"x", x}}, tol);
  return eval_expr(nf.theta_hat, {{"x", x}, {"w", w}}, tol);
}

// ---------------------------------------------------------------- Pruefer

PruferTrajectory prufer_forward(const SecondOrderEq& eq, double u0, double du0,
                                std::span<const double> xs, const ToleranceConfig& tol) {
  if (u0 == 0.0 && du0 == 0.0) throw PreconditionError("initial data (u0, du0) must not vanish");
  const CompiledExpr Q(eq.Q, kX);
  OdeRhs rhs = [&](const OdeState& y, OdeState& dy, double x) {
    const double xa[] = {x};
    const double q = Q.eval(xa, tol.ode_tol);
    const double s = std::sin(y[0]);
    const double c = std::cos(y[0]);
    dy[0] = c * c + q * s * s;
    dy[1] = (1.0 - q) * s * c;
  };
  PruferTrajectory out;
  out.x0 = eq.x0;
  out.theta0 = std::atan2(u0, du0);
  out.logrho0 = 0.5 * std::log(u0 * u0 + du0 * du0);
  const auto states =
      integrate_at(rhs, eq.x0, OdeState{out.theta0, out.logrho0}, xs, eq.breakpoints, tol.ode_tol);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double th = states[i][0];
    const double lr = states[i][1];
    out.x.push_back(xs[i]);
    out.theta.push_back(th);
    out.logrho.push_back(lr);
    out.u.push_back(std::exp(lr) * std::sin(th));
    out.du.push_back(std::exp(lr) * std::cos(th));
  }
  return out;
}

double prufer_reconstruction_residual(const SecondOrderEq& eq, double u0, double du0,
                                      std::span<const double> points, double h,
                                      const ToleranceConfig& tol) {
  std::vector<double> stencil;
  for (double x : points)
    for (int k = -2; k <= 2; ++k) stencil.push_back(x + k * h);
  const auto traj = prufer_forward(eq, u0, du0, stencil, tol);
  const CompiledExpr Q(eq.Q, kX);
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double* u = &traj.u[5 * i];
    const double d2 = (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h);
    const double xa[] = {points[i]};
    worst = std::max(worst, std::fabs(d2 + Q.eval(xa, tol.ode_tol) * u[2]));
  }
  return worst;
}

namespace {

// Zeros of cos^2 psi + Q sin^2 psi modulo pi, for Q <= 0.
std::vector<double> denominator_zeros(double Q) {
  if (Q > 0.0) return {};
  if (Q == 0.0) return {std::numbers::pi / 2.0};
  const double z = std::atan(1.0 / std::sqrt(-Q));
  return {z, -z};
}

bool crosses_zero(double Q, double a, double b) {
  for (double z : denominator_zeros(Q)) {
    const double k = std::ceil((a - z) / std::numbers::pi);
    if (z + k * std::numbers::pi <= b) return true;
  }
  return false;
}

}  // namespace

WitnessReport restricted_integrability_witness(double Q, const PruferTrajectory& traj,
                                               const ToleranceConfig& tol) {
  WitnessReport out;
  const Expr psi = var("psi");
  out.first_integral = quad("psi", cst(traj.theta0), var("theta"),
                            cst(1.0) / (pow(cos(psi), Rational(2)) + cst(Q) * pow(sin(psi), Rational(2))));
  double lo = traj.theta0, hi = traj.theta0;
  for (double th : traj.theta) {
    lo = std::min(lo, th);
    hi = std::max(hi, th);
  }
  if (crosses_zero(Q, lo, hi)) {
    out.singular = true;
    out.max_deviation = std::numeric_limits<double>::infinity();
    out.diagnostic = "first integral singular on range [" + format_number(lo) + ", " +
                     format_number(hi) + "]";
    return out;
  }
  const std::vector<std::string> args{"theta"};
  const CompiledExpr phi(out.first_integral, args);
  const double sq = Q > 0.0 ? std::sqrt(Q) : 0.0;
  auto closed = [&](double p) {
    return (std::atan(sq * std::tan(p)) + std::numbers::pi * std::floor(p / std::numbers::pi + 0.5)) / sq;
  };
  double closed_dev = 0.0;
  for (std::size_t i = 0; i < traj.x.size(); ++i) {
    const double arg[] = {traj.theta[i]};
    const double target = traj.x[i] - traj.x0;
    out.max_deviation = std::max(out.max_deviation, std::fabs(phi.eval(arg, tol.ode_tol) - target));
    if (Q > 0.0) {
      closed_dev = std::max(closed_dev,
                            std::fabs(closed(traj.theta[i]) - closed(traj.theta0) - target));
    }
  }
  if (Q > 0.0) out.closed_form_deviation = closed_dev;
  return out;
}

ObstructionReport nonconstancy_obstruction(const SecondOrderEq& eq, double x1, double x2,
                                           std::span<const std::pair<double, double>> y_pairs,
                                           std::span<const double> y_samples,
                                           const std::optional<Expr>& phi,
                                           const ToleranceConfig& tol) {
  ObstructionReport out;
  out.Q1 = eval_expr(eq.Q, {{"x", x1}}, tol);
  out.Q2 = eval_expr(eq.Q, {{"x", x2}}, tol);
  out.derivable = out.Q1 != out.Q2;
  if (!out.derivable) {
    out.diagnostic = "no obstruction derivable from this pair: Q(x1) = Q(x2)";
    return out;
  }
  for (const auto& [y1, y2] : y_pairs) {
    const double det =
        std::sin(2.0 * y1) * 2.0 * std::cos(2.0 * y2) - 2.0 * std::cos(2.0 * y1) * std::sin(2.0 * y2);
    out.determinants.push_back(det);
    out.max_abs_det = std::max(out.max_abs_det, std::fabs(det));
  }
  if (!phi) return out;

  const Expr y = var("y");
  const Expr d1 = diff_expr(*phi, "y");
  const Expr L = simplify(diff_expr(d1, "y") / d1);
  const Expr dL = diff_expr(L, "y");
  const Expr s2 = pow(sin(y), Rational(2));
  const Expr c2 = pow(cos(y), Rational(2));
  const Expr sin2 = sin(cst(2.0) * y);
  const Expr cos2 = cos(cst(2.0) * y);
  auto pointwise = [&](double Qv) {
    const Expr q = cst(Qv);
    return dL * (c2 + q * s2) + L * (-sin2 + q * sin2) + (cst(-2.0) * cos2 + q * cst(2.0) * cos2);
  };
  const Expr derivative = dL * s2 + L * sin2 + cst(2.0) * cos2;
  const std::vector<std::string> args{"y"};
  const CompiledExpr r1(pointwise(out.Q1), args), r2(pointwise(out.Q2), args), r9(derivative, args);
  double m8 = 0.0, m9 = 0.0;
  for (double yv : y_samples) {
    const double a[] = {yv};
    m8 = std::max({m8, std::fabs(r1.eval(a, tol.ode_tol)), std::fabs(r2.eval(a, tol.ode_tol))});
    m9 = std::max(m9, std::fabs(r9.eval(a, tol.ode_tol)));
  }
  out.pointwise_residual = m8;
  out.derivative_residual = m9;
  return out;
}

}  // namespace quadratura
