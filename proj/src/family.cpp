#include "quadratura/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quadratura/errors.hpp"
#include "quadratura/expr.hpp"

namespace quadratura {

WorkingBox WorkingBox::uniform(std::size_t n, double lo, double hi) {
  WorkingBox box{std::vector<Interval>(n, Interval{lo, hi})};
  box.validate();
  return box;
}

void WorkingBox::validate() const {
  for (const auto& r : params) {
    if (!(r.lo <= r.hi)) throw PreconditionError("working box has an empty range");
    if (!r.contains(0.0)) throw PreconditionError("working box ranges must contain 0");
  }
}

std::vector<std::vector<double>> WorkingBox::sample(std::size_t count, std::uint64_t seed) const {
  Rng rng(seed);
  return latin_hypercube(params, count, rng);
}

double Family::value(double x, std::span<const double> c, const ToleranceConfig& tol) const {
  const double xs[] = {x};
  return values(xs, c, tol).front();
}

std::vector<std::vector<double>> Family::param_gradients(std::span<const double> xs,
                                                         std::span<const double> c,
                                                         const ToleranceConfig& tol) const {
  const std::size_t n = param_dim();
  std::vector<std::vector<double>> out(xs.size(), std::vector<double>(n));
  std::vector<double> p(c.begin(), c.end());
  for (std::size_t k = 0; k < n; ++k) {
    const double h = tol.diff_step_scale * std::max(1.0, std::fabs(c[k]));
    p[k] = c[k] + h;
    const auto up = values(xs, p, tol);
    p[k] = c[k] - h;
    const auto down = values(xs, p, tol);
    p[k] = c[k];
    for (std::size_t i = 0; i < xs.size(); ++i) out[i][k] = (up[i] - down[i]) / (2.0 * h);
  }
  return out;
}

FunctionFamily::FunctionFamily(Fn fn, std::size_t param_dim, double x0, Interval interval)
    : fn_(std::move(fn)), dim_(param_dim), x0_(x0), interval_(interval) {}

std::vector<double> FunctionFamily::values(std::span<const double> xs, std::span<const double> c,
                                           const ToleranceConfig&) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(fn_(x, c));
  return out;
}

SliceFamily::SliceFamily(FamilyPtr base) : base_(std::move(base)) {
  if (!base_ || base_->param_dim() == 0) throw PreconditionError("slice of a parameterless family");
}

std::vector<double> SliceFamily::full(std::span<const double> c) const {
  std::vector<double> p(base_->param_dim(), 0.0);
  p.back() = c[0];
  return p;
}

std::vector<double> SliceFamily::values(std::span<const double> xs, std::span<const double> c,
                                        const ToleranceConfig& tol) const {
  return base_->values(xs, full(c), tol);
}

std::vector<std::vector<double>> SliceFamily::param_gradients(std::span<const double> xs,
                                                              std::span<const double> c,
                                                              const ToleranceConfig& tol) const {
  auto g = base_->param_gradients(xs, full(c), tol);
  std::vector<std::vector<double>> out;
  out.reserve(g.size());
  for (const auto& row : g) out.push_back({row.back()});
  return out;
}

double fundamental_equality_residual(const Family& fam, std::size_t i, std::size_t j,
                                     std::span<const double> xs,
                                     std::span<const std::vector<double>> cs,
                                     const ToleranceConfig& tol) {
  if (i == j) throw PreconditionError("Fundamental Equality needs two distinct parameters");
  if (i >= fam.param_dim() || j >= fam.param_dim())
    throw PreconditionError("parameter index out of range");
  std::vector<double> pts(xs.begin(), xs.end());
  pts.push_back(fam.base_point());
  double worst = 0.0;
  for (const auto& c : cs) {
    const auto g = fam.param_gradients(pts, c, tol);
    const auto& base = g.back();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double lhs = g[k][i] * base[j];
      const double rhs = g[k][j] * base[i];
      const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
      worst = std::max(worst, std::fabs(lhs - rhs) / scale);
    }
  }
  return worst;
}

namespace {

struct Match {
  bool attained = false;
  double d = 0.0;
};

// Finds d with fam(x0, (0, ..., 0, d)) = target by bisection. The bracket
// starts at [-2, 2] and doubles until it straddles the target.
Match match_last_parameter(const Family& fam, double target, const ToleranceConfig& tol) {
  const std::size_t n = fam.param_dim();
  std::vector<double> p(n, 0.0);
  auto h = [&](double d) {
    p.back() = d;
    return fam.value(fam.base_point(), p, tol) - target;
  };
  double lo = -2.0, hi = 2.0, flo = 0.0, fhi = 0.0;
  try {
    for (;;) {
      flo = h(lo);
      fhi = h(hi);
      if (flo == 0.0) return {true, lo};
      if (fhi == 0.0) return {true, hi};
      if ((flo < 0.0) != (fhi < 0.0)) break;
      if (hi >= 1e8) return {};
      lo *= 2.0;
      hi *= 2.0;
    }
  } catch (const EvalError&) {
    return {};
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid))) break;
    const double fm = h(mid);
    if (fm == 0.0) return {true, mid};
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const double d = 0.5 * (lo + hi);
  const double miss = std::fabs(h(d));
  if (miss > tol.equiv_tol * std::max(1.0, std::fabs(target))) return {false, d};
  return {true, d};
}

void match_direction(const Family& src, const Family& dst, std::span<const double> xs,
                     std::span<const std::vector<double>> samples, bool forward,
                     const ToleranceConfig& tol, EquivalenceReport& report, double& gap) {
  for (const auto& c : samples) {
    MatchedPair pair;
    pair.forward = forward;
    pair.source = c;
    const double target = src.value(src.base_point(), c, tol);
    const Match m = match_last_parameter(dst, target, tol);
    pair.attained = m.attained;
    if (!m.attained) {
      if (report.diagnostic.empty()) {
        report.diagnostic = std::string("initial value ") + format_number(target) +
                            " not attained by the " + (forward ? "second" : "first") + " family";
      }
      pair.gap = std::numeric_limits<double>::infinity();
      gap = pair.gap;
      report.pairs.push_back(std::move(pair));
      continue;
    }
    pair.matched.assign(dst.param_dim(), 0.0);
    pair.matched.back() = m.d;
    const auto va = src.values(xs, c, tol);
    const auto vb = dst.values(xs, pair.matched, tol);
    for (std::size_t i = 0; i < xs.size(); ++i) pair.gap = std::max(pair.gap, std::fabs(va[i] - vb[i]));
    gap = std::max(gap, pair.gap);
    report.pairs.push_back(std::move(pair));
  }
}

}  // namespace

EquivalenceReport check_equivalence(const Family& a, const Family& b, std::span<const double> xs,
                                    std::span<const std::vector<double>> samples_a,
                                    std::span<const std::vector<double>> samples_b,
                                    const ToleranceConfig& tol) {
  if (a.base_point() != b.base_point()) {
    throw PreconditionError("families compared for equivalence must share a base point");
  }
  EquivalenceReport report;
  try {
    match_direction(a, b, xs, samples_a, true, tol, report, report.gap_forward);
    match_direction(b, a, xs, samples_b, false, tol, report, report.gap_backward);
  } catch (const EvalError& e) {
    report.diagnostic = std::string("evaluation failed: ") + e.what();
    report.max_gap = std::numeric_limits<double>::infinity();
    return report;
  }
  report.max_gap = std::max(report.gap_forward, report.gap_backward);
  report.equivalent = report.max_gap < tol.equiv_tol;
  if (!report.equivalent && report.diagnostic.empty()) {
    report.diagnostic = "max gap " + format_number(report.max_gap) + " exceeds equiv_tol";
  }
  return report;
}

EffectiveParameterReport effective_parameter_test(const FamilyPtr& fam, std::span<const double> xs,
                                                  std::span<const std::vector<double>> cs,
                                                  const ToleranceConfig& tol) {
  if (!fam || fam->param_dim() == 0) throw PreconditionError("family needs at least one parameter");
  EffectiveParameterReport out;
  const std::size_t n = fam->param_dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = fundamental_equality_residual(*fam, i, j, xs, cs, tol);
      out.pair_residuals.push_back({{i, j}, r});
      out.max_residual = std::max(out.max_residual, r);
    }
  }
  const SliceFamily slice(fam);
  EquivalenceReport rec;
  try {
    match_direction(*fam, slice, xs, cs, true, tol, rec, out.reconstruction_gap);
  } catch (const EvalError& e) {
    rec.diagnostic = std::string("evaluation failed: ") + e.what();
    out.reconstruction_gap = std::numeric_limits<double>::infinity();
  }
  const bool residual_ok = out.max_residual < tol.constancy_tol;
  const bool rec_ok = out.reconstruction_gap < tol.equiv_tol;
  out.passed = residual_ok && rec_ok;
  if (!residual_ok) {
    out.diagnostic = "Fundamental Equality residual " + format_number(out.max_residual) +
                     " exceeds constancy_tol";
  } else if (!rec_ok) {
    out.diagnostic = rec.diagnostic.empty()
                         ? "reconstruction gap " + format_number(out.reconstruction_gap) +
                               " exceeds equiv_tol"
                         : rec.diagnostic;
  }
  return out;
}

std::vector<double> default_grid(const Family& fam, std::size_t n) {
  return chebyshev_points(fam.interval(), n);
}

}  // namespace quadratura
