#include "quadratura/quadrature_system.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "quadratura/calculus.hpp"
#include "quadratura/errors.hpp"
#include "quadratura/ode.hpp"

namespace quadratura {

std::string u_name(std::size_t k) { return "u" + std::to_string(k); }

std::vector<std::string> c_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back("c" + std::to_string(k));
  return out;
}

struct QuadratureSystem::Impl {
  double x0;
  Interval interval;
  std::vector<Expr> integrands;
  std::vector<double> breakpoints;
  std::vector<CompiledExpr> compiled;
  std::vector<std::vector<Expr>> partials;
  std::vector<std::vector<CompiledExpr>> compiled_partials;
};

QuadratureSystem::QuadratureSystem(double x0, Interval interval, std::vector<Expr> integrands,
                                   std::vector<double> breakpoints) {
  if (integrands.empty()) throw PreconditionError("a quadrature system needs at least one integrand");
  if (!(interval.lo < interval.hi)) throw PreconditionError("interval must be nondegenerate");
  if (!interval.contains(x0)) throw PreconditionError("base point x0 must lie in the interval");
  for (double b : breakpoints) {
    if (!interval.contains(b)) throw PreconditionError("breakpoint outside the interval");
  }
  auto impl = std::make_shared<Impl>();
  impl->x0 = x0;
  impl->interval = interval;
  impl->breakpoints = std::move(breakpoints);
  std::sort(impl->breakpoints.begin(), impl->breakpoints.end());

  std::vector<std::string> args{"x"};
  for (std::size_t j = 0; j < integrands.size(); ++j) {
    const Expr& phi = integrands[j];
    for (const auto& v : phi.free_variables()) {
      if (std::find(args.begin(), args.end(), v) == args.end()) {
        throw PreconditionError("integrand phi" + std::to_string(j + 1) + " references '" + v +
                                "'; allowed: x and u1..u" + std::to_string(j));
      }
    }
    impl->compiled.emplace_back(phi, args);
    std::vector<Expr> row;
    std::vector<CompiledExpr> crow;
    for (std::size_t i = 0; i < j; ++i) {
      row.push_back(diff_expr(phi, u_name(i + 1)));
      crow.emplace_back(row.back(), args);
    }
    impl->partials.push_back(std::move(row));
    impl->compiled_partials.push_back(std::move(crow));
    args.push_back(u_name(j + 1));
  }
  impl->integrands = std::move(integrands);
  impl_ = std::move(impl);
}

double QuadratureSystem::x0() const noexcept { return impl_->x0; }
const Interval& QuadratureSystem::interval() const noexcept { return impl_->interval; }
std::size_t QuadratureSystem::size() const noexcept { return impl_->integrands.size(); }
const std::vector<Expr>& QuadratureSystem::integrands() const noexcept { return impl_->integrands; }
const Expr& QuadratureSystem::integrand(std::size_t j) const { return impl_->integrands.at(j); }
const std::vector<double>& QuadratureSystem::breakpoints() const noexcept {
  return impl_->breakpoints;
}

namespace {

thread_local std::vector<double> scratch;

std::span<const double> pack(double x, std::span<const double> u, std::size_t count) {
  scratch.resize(count + 1);
  scratch[0] = x;
  std::copy_n(u.begin(), count, scratch.begin() + 1);
  return scratch;
}

}  // namespace

double QuadratureSystem::eval_integrand(std::size_t j, double x, std::span<const double> u,
                                        double tol) const {
  return impl_->compiled.at(j).eval(pack(x, u, j), tol);
}

const Expr& QuadratureSystem::integrand_partial(std::size_t j, std::size_t i) const {
  return impl_->partials.at(j).at(i);
}

double QuadratureSystem::eval_integrand_partial(std::size_t j, std::size_t i, double x,
                                                std::span<const double> u, double tol) const {
  return impl_->compiled_partials.at(j).at(i).eval(pack(x, u, j), tol);
}

QuadratureSystem QuadratureSystem::with_integrands(std::vector<Expr> integrands) const {
  return QuadratureSystem(impl_->x0, impl_->interval, std::move(integrands), impl_->breakpoints);
}

std::string QuadratureSystem::str() const {
  std::ostringstream os;
  os << "x0 = " << format_number(x0()) << ", I = [" << format_number(interval().lo) << ", "
     << format_number(interval().hi) << "]";
  for (std::size_t j = 0; j < size(); ++j) os << "\n  phi" << j + 1 << " = " << integrand(j).str();
  return os.str();
}

namespace {

void check_inputs(const QuadratureSystem& sys, std::span<const double> xs,
                  std::span<const double> c) {
  if (c.size() + 1 < sys.size()) throw PreconditionError("too few integration constants");
  for (double x : xs) {
    if (!sys.interval().contains(x)) {
      throw PreconditionError("x = " + format_number(x) + " lies outside the system interval");
    }
  }
}

}  // namespace

std::vector<std::vector<double>> eval_system_grid(const QuadratureSystem& sys,
                                                  std::span<const double> xs,
                                                  std::span<const double> c,
                                                  const ToleranceConfig& tol) {
  check_inputs(sys, xs, c);
  const std::size_t n = sys.size();
  const double qtol = tol.ode_tol;
  OdeRhs rhs = [&](const OdeState& s, OdeState& ds, double x) {
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) {
      ds[j] = sys.eval_integrand(j, x, u, qtol);
      u[j] = s[j] + (j < c.size() ? c[j] : 0.0);
    }
  };
  return integrate_at(rhs, sys.x0(), OdeState(n, 0.0), xs, sys.breakpoints(), tol.ode_tol);
}

std::vector<double> eval_system(const QuadratureSystem& sys, double x, std::span<const double> c,
                                const ToleranceConfig& tol) {
  const double xs[] = {x};
  return eval_system_grid(sys, xs, c, tol).front();
}

std::vector<SystemSensitivity> eval_system_sensitivity(const QuadratureSystem& sys,
                                                       std::span<const double> xs,
                                                       std::span<const double> c,
                                                       const ToleranceConfig& tol) {
  check_inputs(sys, xs, c);
  const std::size_t n = sys.size();
  const double qtol = tol.ode_tol;
  // State layout: s (n), then J row-major (n x n).
  OdeRhs rhs = [&](const OdeState& y, OdeState& dy, double x) {
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) {
      dy[j] = sys.eval_integrand(j, x, u, qtol);
      for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < j; ++i) {
          const double wrt = y[n + i * n + k] + (i == k ? 1.0 : 0.0);
          if (wrt != 0.0) acc += sys.eval_integrand_partial(j, i, x, u, qtol) * wrt;
        }
        dy[n + j * n + k] = acc;
      }
      u[j] = y[j] + (j < c.size() ? c[j] : 0.0);
    }
  };
  auto states =
      integrate_at(rhs, sys.x0(), OdeState(n + n * n, 0.0), xs, sys.breakpoints(), tol.ode_tol);
  std::vector<SystemSensitivity> out;
  out.reserve(states.size());
  for (const auto& y : states) {
    SystemSensitivity r;
    r.s.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    r.ds.assign(n, std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) r.ds[j][k] = y[n + j * n + k];
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

double smallest_singular(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

struct PivotResult {
  std::vector<std::size_t> rows;
  double sigma_min = 0.0;
  double norm = 0.0;
};

// Greedy selection: the k-th pivot maximizes the smallest singular value of
// the leading k x k block.
PivotResult select_pivots(const Eigen::MatrixXd& v) {
  const auto n = v.cols();
  PivotResult out;
  for (Eigen::Index k = 1; k <= n; ++k) {
    double best = -1.0;
    std::size_t best_row = 0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::find(out.rows.begin(), out.rows.end(), static_cast<std::size_t>(r)) != out.rows.end())
        continue;
      Eigen::MatrixXd block(k, k);
      for (Eigen::Index i = 0; i + 1 < k; ++i)
        block.row(i) = v.row(static_cast<Eigen::Index>(out.rows[static_cast<std::size_t>(i)])).head(k);
      block.row(k - 1) = v.row(r).head(k);
      const double s = smallest_singular(block);
      if (s > best) {
        best = s;
        best_row = static_cast<std::size_t>(r);
      }
    }
    out.rows.push_back(best_row);
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = v.row(static_cast<Eigen::Index>(out.rows[static_cast<std::size_t>(i)]));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  out.norm = svd.singularValues()(0);
  out.sigma_min = svd.singularValues()(n - 1);
  return out;
}

}  // namespace

IndependenceReport check_independence(const QuadratureSystem& sys, std::size_t search_budget,
                                      const ToleranceConfig& tol) {
  const std::size_t n = sys.size();
  const std::size_t candidates = std::max<std::size_t>(64, 4 * n);
  const auto grid = chebyshev_points(sys.interval(), candidates);

  std::vector<std::vector<double>> witnesses{std::vector<double>(n - 1, 0.0)};
  if (n > 1 && search_budget > 1) {
    Rng rng(tol.seed);
    std::vector<Interval> box(n - 1, Interval{-2.0, 2.0});
    auto extra = latin_hypercube(box, search_budget - 1, rng);
    witnesses.insert(witnesses.end(), extra.begin(), extra.end());
  }

  IndependenceReport best;
  double best_ratio = -1.0;
  for (const auto& c : witnesses) {
    ++best.witnesses_tried;
    std::vector<double> xs_used;
    Eigen::MatrixXd v(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(n));
    for (double x : grid) {
      const auto r = static_cast<Eigen::Index>(xs_used.size());
      try {
        for (std::size_t j = 0; j < n; ++j)
          v(r, static_cast<Eigen::Index>(j)) = sys.eval_integrand(j, x, c, tol.ode_tol);
      } catch (const EvalError&) {
        continue;
      }
      xs_used.push_back(x);
    }
    const auto filled = static_cast<Eigen::Index>(xs_used.size());
    if (filled < static_cast<Eigen::Index>(n)) continue;
    const auto piv = select_pivots(v.topRows(filled));
    const double ratio = piv.norm > 0.0 ? piv.sigma_min / piv.norm : 0.0;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best.witness_constants = c;
      best.pivot_points.clear();
      for (auto r : piv.rows) best.pivot_points.push_back(xs_used[r]);
      best.smallest_singular_value = piv.sigma_min;
      best.matrix_norm = piv.norm;
      best.independent = piv.norm > 0.0 && piv.sigma_min >= tol.rank_threshold * piv.norm;
    }
    if (best.independent) break;
  }
  return best;
}

InvarianceReport invariance_probe(const Expr& g, const QuadratureSystem& sys,
                                  std::span<const double> xs,
                                  std::span<const std::vector<double>> cs,
                                  const ToleranceConfig& tol) {
  const std::size_t n = sys.size();
  const auto names = c_names(n);
  const CompiledExpr cg(g, names);
  InvarianceReport out;
  double gmin = 0.0, gmax = 0.0;
  bool first = true;
  for (const auto& c : cs) {
    if (c.size() != n) throw PreconditionError("probe constants must have one entry per quadrature");
    const double g0 = cg.eval(c, tol.ode_tol);
    gmin = first ? g0 : std::min(gmin, g0);
    gmax = first ? g0 : std::max(gmax, g0);
    first = false;
    const auto grid = eval_system_grid(sys, xs, c, tol);
    std::vector<double> shifted(n);
    for (const auto& s : grid) {
      for (std::size_t j = 0; j < n; ++j) shifted[j] = s[j] + c[j];
      out.probe_deviation = std::max(out.probe_deviation, std::fabs(cg.eval(shifted, tol.ode_tol) - g0));
      ++out.samples;
    }
  }
  out.spread = gmax - gmin;
  return out;
}

}  // namespace quadratura
