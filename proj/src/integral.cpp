#include "quadratura/integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quadratura/calculus.hpp"
#include "quadratura/errors.hpp"

namespace quadratura {

std::string v_name(std::size_t k) { return "v" + std::to_string(k); }

namespace {

std::vector<std::string> v_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back(v_name(k));
  return out;
}

const std::vector<std::string> kThetaArgs{"x", "w"};

void require_names(const Expr& e, const std::vector<std::string>& allowed, const char* what) {
  for (const auto& v : e.free_variables()) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      throw PreconditionError(std::string(what) + " references unknown variable '" + v + "'");
    }
  }
}

}  // namespace

void QuadratureIntegral::validate() const {
  require_names(F, v_names(size()), "F");
  require_names(theta, kThetaArgs, "theta");
}

IntegralFamily::IntegralFamily(QuadratureIntegral q) : q_(std::move(q)) {
  q_.validate();
  const auto names = v_names(q_.size());
  F_ = CompiledExpr(q_.F, names);
  theta_ = CompiledExpr(q_.theta, kThetaArgs);
  theta_w_ = CompiledExpr(diff_expr(q_.theta, "w"), kThetaArgs);
  for (const auto& v : names) F_partials_.emplace_back(diff_expr(q_.F, v), names);
}

std::vector<double> IntegralFamily::values(std::span<const double> xs, std::span<const double> c,
                                           const ToleranceConfig& tol) const {
  const std::size_t n = q_.size();
  if (c.size() != n) throw PreconditionError("parameter vector has the wrong length");
  const auto grid = eval_system_grid(q_.sys, xs, c, tol);
  std::vector<double> out;
  out.reserve(xs.size());
  std::vector<double> v(n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) v[j] = grid[i][j] + c[j];
    const double w = F_.eval(v, tol.ode_tol);
    const double args[] = {xs[i], w};
    out.push_back(theta_.eval(args, tol.ode_tol));
  }
  return out;
}

std::vector<std::vector<double>> IntegralFamily::param_gradients(std::span<const double> xs,
                                                                 std::span<const double> c,
                                                                 const ToleranceConfig& tol) const {
  const std::size_t n = q_.size();
  if (c.size() != n) throw PreconditionError("parameter vector has the wrong length");
  const auto sens = eval_system_sensitivity(q_.sys, xs, c, tol);
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  std::vector<double> v(n), dF(n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) v[j] = sens[i].s[j] + c[j];
    for (std::size_t j = 0; j < n; ++j) dF[j] = F_partials_[j].eval(v, tol.ode_tol);
    const double args[] = {xs[i], F_.eval(v, tol.ode_tol)};
    const double tw = theta_w_.eval(args, tol.ode_tol);
    std::vector<double> row(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += dF[j] * (sens[i].ds[j][k] + (j == k ? 1.0 : 0.0));
      row[k] = tw * acc;
    }
    out.push_back(std::move(row));
  }
  return out;
}

double eval_integral(const QuadratureIntegral& q, double x, std::span<const double> c,
                     const ToleranceConfig& tol) {
  return IntegralFamily(q).value(x, c, tol);
}

namespace {

void accumulate(AdmissibilityReport& r, double d, bool& have_sign, bool& positive) {
  ++r.samples;
  const double a = std::fabs(d);
  r.min_abs_partial = r.samples == 1 ? a : std::min(r.min_abs_partial, a);
  if (d != 0.0) {
    if (!have_sign) {
      have_sign = true;
      positive = d > 0.0;
    } else if ((d > 0.0) != positive) {
      r.sign_consistent = false;
    }
  }
}

void finish(AdmissibilityReport& r, const char* what) {
  r.admissible = r.failures == 0 && r.sign_consistent && r.samples > 0 &&
                 r.min_abs_partial >= kNonvanishingFloor;
  if (r.admissible) return;
  if (r.failures > 0) {
    r.diagnostic = std::string(what) + " failed to evaluate at " + std::to_string(r.failures) +
                   " sampled points";
  } else if (!r.sign_consistent) {
    r.diagnostic = std::string(what) + " changes sign on the sampled box";
  } else {
    r.diagnostic = std::string(what) + " comes within " + format_number(r.min_abs_partial) +
                   " of zero";
  }
}

}  // namespace

AdmissibilityReport check_admissible(const Expr& F, std::size_t n, const WorkingBox& box,
                                     const ToleranceConfig& tol) {
  if (n == 0 || box.size() != n) throw PreconditionError("working box dimension must equal n");
  const auto names = v_names(n);
  require_names(F, names, "F");
  const CompiledExpr partial(diff_expr(F, v_name(n)), names);

  auto samples = box.sample(std::max<std::size_t>(10 * tol.sample_count, 16), tol.seed);
  samples.push_back(std::vector<double>(n, 0.0));
  AdmissibilityReport r;
  bool have_sign = false, positive = true;
  for (const auto& v : samples) {
    try {
      accumulate(r, partial.eval(v, tol.ode_tol), have_sign, positive);
    } catch (const EvalError&) {
      ++r.failures;
    }
  }
  finish(r, ("dF/d" + v_name(n)).c_str());
  return r;
}

AdmissibilityReport check_theta(const Expr& theta, std::span<const double> xs, Interval w_range,
                                const ToleranceConfig& tol) {
  require_names(theta, kThetaArgs, "theta");
  const CompiledExpr partial(diff_expr(theta, "w"), kThetaArgs);
  const auto ws = chebyshev_points(w_range, std::max<std::size_t>(tol.sample_count, 2));
  AdmissibilityReport r;
  bool have_sign = false, positive = true;
  for (double x : xs) {
    for (double w : ws) {
      const double args[] = {x, w};
      try {
        accumulate(r, partial.eval(args, tol.ode_tol), have_sign, positive);
      } catch (const EvalError&) {
        ++r.failures;
      }
    }
  }
  finish(r, "dtheta/dw");
  return r;
}

}  // namespace quadratura
