#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quadratura/eval.hpp"
#include "quadratura/expr.hpp"
#include "quadratura/sampling.hpp"
#include "quadratura/tolerance.hpp"

namespace quadratura {

/// Name of the k-th running quadrature value (1-based): u1, u2, ...
std::string u_name(std::size_t k);

/// An ordered, complete system of nested quadratures
///
///   s_j(x, c) = integral from x0 to x of phi_j(t, s_1(t)+c_1, ..., s_{j-1}(t)+c_{j-1}).
///
/// phi_j is an Expr over x and u1..u(j-1). Immutable; copies share state.
class QuadratureSystem {
 public:
  /// Throws PreconditionError when phi_j references names other than x and
  /// u1..u(j-1), the interval is degenerate, or x0 lies outside it. Breakpoints mark discontinuities of the integrands in x.
  QuadratureSystem(double x0, Interval interval, std::vector<Expr> integrands,
                   std::vector<double> breakpoints = {});

  double x0() const noexcept;
  const Interval& interval() const noexcept;
  std::size_t size() const noexcept;
  const std::vector<Expr>& integrands() const noexcept;
  const Expr& integrand(std::size_t j) const;  // 0-based
  const std::vector<double>& breakpoints() const noexcept;

  /// phi_j(x, u) with u holding at least j values.
  double eval_integrand(std::size_t j, double x, std::span<const double> u, double tol) const;
  /// d phi_j / d u_{i+1}, symbolic, i < j (0-based).
  const Expr& integrand_partial(std::size_t j, std::size_t i) const;
  double eval_integrand_partial(std::size_t j, std::size_t i, double x, std::span<const double> u,
                                double tol) const;

  /// New system sharing x0, interval and breakpoints.
  QuadratureSystem with_integrands(std::vector<Expr> integrands) const;

  std::string str() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// (s_1(x), ..., s_n(x, c)). `c` needs at least n-1 entries.
std::vector<double> eval_system(const QuadratureSystem& sys, double x, std::span<const double> c,
                                const ToleranceConfig& tol);

/// eval_system at every point of `xs` from a single joint ODE solve.
std::vector<std::vector<double>> eval_system_grid(const QuadratureSystem& sys,
                                                  std::span<const double> xs,
                                                  std::span<const double> c,
                                                  const ToleranceConfig& tol);

/// Values and parameter sensitivities of a system at one x.
struct SystemSensitivity {
  std::vector<double> s;
  /// ds[j][k] = d s_{j+1} / d c_{k+1}; n x n, zero for k >= j.
  std::vector<std::vector<double>> ds;
};

/// Integrates the variational equations alongside the system.
std::vector<SystemSensitivity> eval_system_sensitivity(const QuadratureSystem& sys,
                                                       std::span<const double> xs,
                                                       std::span<const double> c,
                                                       const ToleranceConfig& tol);

struct IndependenceReport {
  bool independent = false;
  std::vector<double> witness_constants;
  std::vector<double> pivot_points;
  double smallest_singular_value = 0.0;
  double matrix_norm = 0.0;
  std::size_t witnesses_tried = 0;
};

/// Searches constants c^ (zero first, then a Latin-hypercube sample of
/// [-2,2]^(n-1)) and pivot points from a Chebyshev candidate grid so that
/// M[i][j] = phi_j(x_i, c^) is well conditioned. Independent iff the
/// smallest singular value is at least rank_threshold * ||M||_2.
IndependenceReport check_independence(const QuadratureSystem& sys, std::size_t search_budget,
                                      const ToleranceConfig& tol);

struct InvarianceReport {
  double probe_deviation = 0.0;  // max |g(s(x,c)+c) - g(c)|
  double spread = 0.0;           // max |g(c) - g(c')| over sample pairs
  std::size_t samples = 0;
};

/// Tests whether g(c1..cn) is invariant along the system's shift flow.
InvarianceReport invariance_probe(const Expr& g, const QuadratureSystem& sys,
                                  std::span<const double> xs,
                                  std::span<const std::vector<double>> cs,
                                  const ToleranceConfig& tol);

/// Names c1..cn.
std::vector<std::string> c_names(std::size_t n);

}  // namespace quadratura
