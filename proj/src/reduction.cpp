#include "quadratura/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quadratura/calculus.hpp"

namespace quadratura {

std::vector<std::string> ReductionTrace::rules() const {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(s.rule);
  return out;
}

namespace {

Expr v(std::size_t k) { return var(v_name(k)); }
Expr u(std::size_t k) { return var(u_name(k)); }

std::vector<std::string> names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

std::vector<std::string> x_and_u(std::size_t k) {
  std::vector<std::string> out{"x"};
  for (std::size_t j = 1; j <= k; ++j) out.push_back(u_name(j));
  return out;
}

// v1..vn -> u1..un
Expr to_u(const Expr& e, std::size_t n) {
  Bindings b;
  for (std::size_t k = 1; k <= n; ++k) b.emplace(v_name(k), u(k));
  return substitute(e, b, CapturePolicy::Rename);
}

// int_0^upper integrand dt, where `slot` is the integration variable inside `integrand`.
Expr quad_over(const std::string& slot, const Expr& upper, const Expr& integrand) {
  const Expr pool[] = {integrand, upper};
  const std::string t = fresh_symbol(pool, "t");
  return quad(t, cst(0.0), upper, substitute(integrand, {{slot, var(t)}}, CapturePolicy::Rename));
}

std::uint64_t salted(const ReductionOptions& opts, std::uint64_t salt) {
  return opts.tol.seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
}

std::vector<std::vector<double>> box_samples(std::size_t dims, std::size_t count,
                                             const ReductionOptions& opts, std::uint64_t salt) {
  WorkingBox box{std::vector<Interval>(dims, opts.box)};
  auto out = box.sample(count, salted(opts, salt));
  out.push_back(std::vector<double>(dims, 0.0));
  return out;
}

// Max of |e| / max(1, |scale|) over the samples; `scale` may be empty.
double sampled_max(const Expr& e, const Expr* scale, const std::vector<std::string>& args,
                   const std::vector<std::vector<double>>& points, const ReductionOptions& opts,
                   const char* what) {
  const CompiledExpr ce(e, args);
  CompiledExpr cs;
  if (scale) cs = CompiledExpr(*scale, args);
  double worst = 0.0;
  std::size_t ok = 0;
  std::string last_error;
  for (const auto& p : points) {
    try {
      const double val = std::fabs(ce.eval(p, opts.tol.ode_tol));
      const double den = scale ? std::max(1.0, std::fabs(cs.eval(p, opts.tol.ode_tol))) : 1.0;
      worst = std::max(worst, val / den);
      ++ok;
    } catch (const EvalError& err) {
      last_error = err.what();
    }
  }
  if (ok == 0) throw ReductionError(std::string("could not evaluate ") + what + ": " + last_error);
  return worst;
}

// Points (x, u1..uk) with x on a Chebyshev grid of the system interval.
std::vector<std::vector<double>> xu_samples(const QuadratureSystem& sys, std::size_t k,
                                            const ReductionOptions& opts, std::uint64_t salt) {
  const auto xs = chebyshev_points(sys.interval(), 9);
  const auto us = box_samples(k, opts.tol.sample_count, opts, salt);
  std::vector<std::vector<double>> out;
  for (double x : xs) {
    for (const auto& uu : us) {
      std::vector<double> p{x};
      p.insert(p.end(), uu.begin(), uu.end());
      out.push_back(std::move(p));
    }
  }
  return out;
}

// Sampled |d e / d wrt| normalized by max(1, |e|).
double redundancy_residual(const Expr& e, const std::string& wrt, std::size_t k,
                           const QuadratureSystem& sys, const ReductionOptions& opts,
                           std::uint64_t salt) {
  const Expr d = diff_expr(e, wrt);
  if (d.is_constant(0.0)) return 0.0;
  return sampled_max(d, &e, x_and_u(k), xu_samples(sys, k, opts, salt), opts,
                     "redundancy residual");
}

void require_redundant(double residual, const std::string& what, const ReductionOptions& opts) {
  if (residual >= opts.tol.constancy_tol) {
    throw ReductionError("redundancy check failed: " + what + " still depends on the eliminated " +
                         "constant (residual " + format_number(residual) + ")");
  }
}

double check_step_equivalence(const QuadratureIntegral& before, const QuadratureIntegral& after,
                              const ReductionOptions& opts, std::uint64_t salt) {
  const IntegralFamily a(before);
  const IntegralFamily b(after);
  const auto xs = chebyshev_points(a.interval(), opts.grid_points);
  WorkingBox box_a{std::vector<Interval>(a.param_dim(), opts.box)};
  WorkingBox box_b{std::vector<Interval>(b.param_dim(), opts.box)};
  const auto sa = box_a.sample(opts.tol.sample_count, salted(opts, salt));
  const auto sb = box_b.sample(opts.tol.sample_count, salted(opts, salt + 1));
  const auto rep = check_equivalence(a, b, xs, sa, sb, opts.tol);
  if (!rep.equivalent) {
    throw ReductionError("step output is not equivalent to its input: " + rep.diagnostic);
  }
  return rep.max_gap;
}

void record_absorption(TraceStep& step, const std::string& label, const AbsorptionResult& r) {
  step.residuals.emplace_back(label + "_identity", r.identity_residual);
  const double ratio = r.independence.matrix_norm > 0.0
                           ? r.independence.smallest_singular_value / r.independence.matrix_norm
                           : 0.0;
  step.residuals.emplace_back(label + "_independence_ratio", ratio);
  if (!r.independence.independent) {
    step.notes.push_back("independence not confirmed numerically after " + label +
                         " (relative singular value " + format_number(ratio) + ")");
  }
}

std::vector<Expr> prefix_integrands(const QuadratureSystem& sys, std::size_t count) {
  return {sys.integrands().begin(), sys.integrands().begin() + static_cast<std::ptrdiff_t>(count)};
}

}  // namespace

// ---------------------------------------------------------------- normal form

QuadratureIntegral normal_form_integral(const NormalForm& nf) {
  QuadratureSystem sys(nf.x0, nf.interval, {simplify(-nf.p), nf.q * exp(-u(1))});
  return {sys, exp(v(1)) * v(2), nf.theta_hat};
}

FamilyPtr normal_form_family(const NormalForm& nf) {
  return std::make_shared<SliceFamily>(std::make_shared<IntegralFamily>(normal_form_integral(nf)));
}

QuadratureIntegral ExponentialShapeIntegral::to_integral() const {
  const std::size_t m = prefix();
  const Expr composed = substitute(F, {{v_name(m + 1), exp(v(m + 1)) * v(m + 2)}});
  return {sys, composed, theta};
}

// ---------------------------------------------------------------- building blocks

LinearPdeSolution solve_linear_pde(const Expr& H, const std::vector<std::string>& vars,
                                   const Expr& a, const Expr& b, const ReductionOptions& opts) {
  const std::size_t n = vars.size();
  if (n < 2) throw PreconditionError("solve_linear_pde needs at least two variables");
  const std::string& y = vars[n - 2];
  const std::string& z = vars[n - 1];
  for (const Expr* e : {&a, &b}) {
    if (e->depends_on(z)) throw PreconditionError("PDE coefficients must not depend on the last variable");
  }

  const Expr pde = simplify(diff_expr(H, y) - (a * var(z) + b) * diff_expr(H, z));
  const auto points = box_samples(n, 5 * opts.tol.sample_count, opts, 11);
  LinearPdeSolution out;
  out.pde_residual = pde.is_constant(0.0) ? 0.0 : sampled_max(pde, nullptr, vars, points, opts, "PDE residual");
  if (out.pde_residual >= opts.tol.constancy_tol) {
    throw ReductionError("input does not satisfy the linear PDE (residual " +
                         format_number(out.pde_residual) + ")");
  }

  out.G = substitute(H, {{y, cst(0.0)}});
  const Expr A = quad_over(y, var(y), a);
  const Expr B = quad_over(y, var(y), b * exp(A));
  out.transform = simplify(exp(A) * var(z) + B);

  const Expr rebuilt = substitute(out.G, {{z, out.transform}}, CapturePolicy::Rename);
  out.reconstruction_residual =
      sampled_max(H - rebuilt, nullptr, vars, points, opts, "PDE reconstruction");
  return out;
}

AbsorptionResult absorb_into(const QuadratureSystem& sys, std::size_t k, const Expr& B,
                             const ReductionOptions& opts) {
  if (k == 0 || k >= sys.size()) throw PreconditionError("absorption target must have a predecessor");
  for (const auto& name : B.free_variables()) {
    const auto allowed = x_and_u(k);
    if (name == "x" || std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw PreconditionError("absorbed function may only depend on u1..u" + std::to_string(k));
    }
  }
  Expr updated = sys.integrand(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Expr d = diff_expr(B, u_name(j + 1));
    if (!d.is_constant(0.0)) updated = updated + d * sys.integrand(j);
  }
  std::vector<Expr> integrands = sys.integrands();
  integrands[k] = simplify(updated);
  AbsorptionResult out{sys.with_integrands(std::move(integrands)), 0.0, {}};

  if (!B.is_constant()) {
    const CompiledExpr cb(B, names("u", k));
    const auto xs = chebyshev_points(sys.interval(), 9);
    const auto cs = box_samples(sys.size(), opts.tol.sample_count, opts, 23);
    for (const auto& c : cs) {
      const auto before = eval_system_grid(sys, xs, c, opts.tol);
      const auto after = eval_system_grid(out.sys, xs, c, opts.tol);
      const double b0 = cb.eval(std::span<const double>(c.data(), k), opts.tol.ode_tol);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        std::vector<double> shifted(k);
        for (std::size_t j = 0; j < k; ++j) shifted[j] = before[i][j] + c[j];
        const double lhs = before[i][k] + cb.eval(shifted, opts.tol.ode_tol);
        const double rhs = after[i][k] + b0;
        out.identity_residual =
            std::max(out.identity_residual, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
      }
    }
  }
  out.independence = check_independence(out.sys, opts.tol.sample_count, opts.tol);
  return out;
}

AbsorptionResult absorb_into_integrand(const QuadratureSystem& sys, const Expr& B,
                                       const ReductionOptions& opts) {
  return absorb_into(sys, sys.size() - 1, B, opts);
}

AlphaExtraction extract_alpha(const Expr& F, std::size_t n, const ReductionOptions& opts) {
  if (n == 0) throw PreconditionError("extract_alpha needs n >= 1");
  const auto args = names("v", n + 1);
  AlphaExtraction out;
  out.ratio = simplify(diff_expr(F, v_name(n)) / diff_expr(F, v_name(n + 1)));
  const Expr dR = diff_expr(out.ratio, v_name(n + 1));
  const CompiledExpr cd(dR, args);
  const auto points = box_samples(n + 1, 5 * opts.tol.sample_count, opts, 5);
  std::vector<double> vals;
  for (const auto& p : points) {
    try {
      vals.push_back(cd.eval(p, opts.tol.ode_tol));
    } catch (const EvalError&) {
    }
  }
  if (vals.empty()) throw ReductionError("could not evaluate dF ratio on the working box");
  double sum = 0.0;
  for (double x : vals) sum += x;
  out.alpha = sum / static_cast<double>(vals.size());
  for (double x : vals) out.constancy_residual = std::max(out.constancy_residual, std::fabs(x - out.alpha));
  if (out.constancy_residual >= opts.tol.constancy_tol) {
    throw ReductionError("Fundamental-Equality structure absent: d/dC of the partial ratio varies by " +
                         format_number(out.constancy_residual));
  }
  out.beta = simplify(substitute(out.ratio, {{v_name(n + 1), cst(0.0)}}));
  return out;
}

// ---------------------------------------------------------------- reduction steps

StepAResult reduce_step_A(const QuadratureIntegral& q, const ReductionOptions& opts) {
  const std::size_t N = q.size();
  if (N < 2) throw PreconditionError("reduce_step_A needs at least two quadratures");
  q.validate();
  const std::size_t n = N - 1;
  const auto ax = extract_alpha(q.F, n, opts);
  const double alpha = std::fabs(ax.alpha) <= opts.tol.constancy_tol ? 0.0 : ax.alpha;
  const auto pde = solve_linear_pde(q.F, names("v", N), cst(alpha), ax.beta, opts);

  StepAResult out;
  TraceStep& step = out.step;
  step.count_before = N;
  step.objects.emplace_back("alpha", format_number(alpha));
  step.objects.emplace_back("beta", ax.beta.str());
  step.residuals.emplace_back("alpha_constancy", ax.constancy_residual);
  step.residuals.emplace_back("pde_residual", pde.pde_residual);
  step.residuals.emplace_back("pde_reconstruction", pde.reconstruction_residual);

  const Expr beta_u = to_u(ax.beta, n);
  const Expr G = substitute(q.F, {{v_name(n), cst(0.0)}, {v_name(N), v(n)}});
  const QuadratureSystem& sys = q.sys;
  const std::string un = u_name(n);

  if (alpha == 0.0) {
    step.rule = rule::kEliminate;
    const Expr B = simplify(quad_over(un, var(un), beta_u));
    step.objects.emplace_back("B", B.str());
    const auto ab = absorb_into_integrand(sys, B, opts);
    record_absorption(step, "absorption", ab);
    const Expr absorbed = ab.sys.integrand(N - 1);
    const double red = redundancy_residual(absorbed, un, n, sys, opts, 31);
    step.residuals.emplace_back("redundancy", red);
    require_redundant(red, "the absorbed integrand", opts);
    auto integrands = prefix_integrands(sys, n - 1);
    integrands.push_back(simplify(substitute(absorbed, {{un, cst(0.0)}})));
    step.objects.emplace_back("Phi_hat", integrands.back().str());
    out.reduced = QuadratureIntegral{sys.with_integrands(std::move(integrands)), G, q.theta};
    step.count_after = n;
    if (opts.check_steps) {
      step.residuals.emplace_back("equivalence_gap",
                                  check_step_equivalence(q, *out.reduced, opts, 41));
    }
    return out;
  }

  step.rule = rule::kExponential;
  const Expr a = cst(alpha);
  const Expr phi_s = simplify(a * sys.integrand(n - 1));
  const Expr Phi = simplify(substitute(sys.integrand(N - 1), {{un, var(un) / a}}, CapturePolicy::Rename));
  const Expr B = simplify(exp(-var(un)) * quad_over(un, var(un) / a, beta_u * exp(a * var(un))));
  step.objects.emplace_back("phi_s", phi_s.str());
  step.objects.emplace_back("B", B.str());
  auto integrands = prefix_integrands(sys, n - 1);
  integrands.push_back(phi_s);
  integrands.push_back(Phi);
  const auto ab = absorb_into_integrand(sys.with_integrands(std::move(integrands)), B, opts);
  record_absorption(step, "absorption", ab);
  step.objects.emplace_back("Phi_hat", ab.sys.integrand(N - 1).str());
  out.shape = ExponentialShapeIntegral{ab.sys, G, q.theta};
  step.count_after = N;
  if (opts.check_steps) {
    step.residuals.emplace_back("equivalence_gap",
                                check_step_equivalence(q, out.shape->to_integral(), opts, 43));
  }
  return out;
}

StepBResult reduce_step_B(const ExponentialShapeIntegral& e, const ReductionOptions& opts) {
  const std::size_t n = e.prefix();
  if (n == 0) throw PreconditionError("reduce_step_B needs a nonempty prefix");
  const QuadratureSystem& sys = e.sys;
  const std::string D = v_name(n + 1);
  const std::string un = u_name(n);
  const std::string us = u_name(n + 1);

  TraceStep step;
  step.rule = rule::kShapeStep;
  step.count_before = sys.size();

  const Expr R = simplify(diff_expr(e.F, v_name(n)) / diff_expr(e.F, D));
  const Expr dR = diff_expr(R, D);
  const Expr d2R = diff_expr(dR, D);
  const auto vars = names("v", n + 1);
  const double gamma = d2R.is_constant(0.0)
                           ? 0.0
                           : sampled_max(d2R, nullptr, vars,
                                         box_samples(n + 1, 5 * opts.tol.sample_count, opts, 7),
                                         opts, "second D-derivative of the partial ratio");
  step.residuals.emplace_back("gamma", gamma);
  if (gamma >= opts.tol.constancy_tol) {
    throw ReductionError("partial ratio is not affine in the exponential slot (residual " +
                         format_number(gamma) + ")");
  }
  const Expr alpha = simplify(substitute(dR, {{D, cst(0.0)}}));
  const Expr beta = simplify(substitute(R, {{D, cst(0.0)}}));
  step.objects.emplace_back("alpha", alpha.str());
  step.objects.emplace_back("beta", beta.str());
  const auto pde = solve_linear_pde(e.F, vars, alpha, beta, opts);
  step.residuals.emplace_back("pde_residual", pde.pde_residual);
  step.residuals.emplace_back("pde_reconstruction", pde.reconstruction_residual);

  const Expr A = simplify(quad_over(un, var(un), to_u(alpha, n)));
  const Expr Bp = simplify(quad_over(un, var(un), to_u(beta, n) * exp(A)));
  step.objects.emplace_back("A", A.str());
  step.objects.emplace_back("B_prime", Bp.str());

  const auto ab1 = absorb_into(sys, n, A, opts);
  record_absorption(step, "absorption_s", ab1);
  const Expr phi1 = ab1.sys.integrand(n);
  const Expr Phi1 =
      simplify(substitute(sys.integrand(n + 1), {{us, var(us) - A}}, CapturePolicy::Rename));
  auto integrands = prefix_integrands(sys, n);
  integrands.push_back(phi1);
  integrands.push_back(Phi1);
  const QuadratureSystem sys2 = sys.with_integrands(std::move(integrands));
  const Expr B = simplify(exp(-var(us)) * Bp);
  const auto ab2 = absorb_into(sys2, n + 1, B, opts);
  record_absorption(step, "absorption_S", ab2);
  const Expr Phi2 = ab2.sys.integrand(n + 1);

  const double red1 = redundancy_residual(phi1, un, n, sys, opts, 53);
  const double red2 = redundancy_residual(Phi2, un, n + 1, sys, opts, 59);
  step.residuals.emplace_back("redundancy_s", red1);
  step.residuals.emplace_back("redundancy_S", red2);
  require_redundant(red1, "the integrand of s", opts);
  require_redundant(red2, "the integrand of S", opts);

  auto reduced = prefix_integrands(sys, n - 1);
  reduced.push_back(simplify(substitute(phi1, {{un, cst(0.0)}})));
  reduced.push_back(simplify(substitute(Phi2, {{un, cst(0.0)}, {us, var(un)}})));
  step.objects.emplace_back("phi_hat", reduced[n - 1].str());
  step.objects.emplace_back("Phi_hat", reduced[n].str());
  const Expr G = substitute(e.F, {{v_name(n), cst(0.0)}, {D, v(n)}});

  StepBResult out{ExponentialShapeIntegral{sys.with_integrands(std::move(reduced)), G, e.theta},
                  std::move(step)};
  out.step.count_after = out.reduced.sys.size();
  if (opts.check_steps) {
    out.step.residuals.emplace_back(
        "equivalence_gap",
        check_step_equivalence(e.to_integral(), out.reduced.to_integral(), opts, 61));
  }
  return out;
}

// ---------------------------------------------------------------- driver

namespace {

NormalForm terminal_one(const QuadratureIntegral& q, TraceStep& step) {
  step.rule = rule::kTerminalOne;
  step.count_before = step.count_after = 1;
  const Expr inner = substitute(q.F, {{v_name(1), var("w")}});
  NormalForm nf{cst(0.0), q.sys.integrand(0), substitute(q.theta, {{"w", inner}}), q.sys.x0(),
                q.sys.interval()};
  return nf;
}

NormalForm terminal_two(const ExponentialShapeIntegral& e, TraceStep& step,
                        const ReductionOptions& opts) {
  step.rule = rule::kTerminalTwo;
  step.count_before = step.count_after = 2;
  const Expr Phi = e.sys.integrand(1);
  const Expr defect = simplify(Phi + diff_expr(Phi, u_name(1)));
  const double residual =
      defect.is_constant(0.0)
          ? 0.0
          : sampled_max(defect, &Phi, x_and_u(1), xu_samples(e.sys, 1, opts, 71), opts,
                        "exponential factorization");
  step.residuals.emplace_back("factorization", residual);
  if (residual >= opts.tol.constancy_tol) {
    throw ReductionError("normal-form factorization absent: Phi*exp(u1) depends on u1 (residual " +
                         format_number(residual) + ")");
  }
  const Expr inner = substitute(e.F, {{v_name(1), var("w")}});
  return NormalForm{simplify(-e.sys.integrand(0)),
                    simplify(substitute(Phi, {{u_name(1), cst(0.0)}})),
                    substitute(e.theta, {{"w", inner}}), e.sys.x0(), e.sys.interval()};
}

template <class Fn>
auto traced(ReductionTrace& trace, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ReductionError& err) {
    throw ReductionError(err.what(), trace);
  } catch (const EvalError& err) {
    throw ReductionError(std::string("evaluation failed during reduction: ") + err.what(), trace);
  }
}

}  // namespace

ReductionResult reduce_to_normal_form(const QuadratureIntegral& q, const ReductionOptions& opts) {
  opts.tol.validate();
  q.validate();
  ReductionResult out;
  ReductionTrace& trace = out.trace;

  std::optional<QuadratureIntegral> current = q;
  std::optional<ExponentialShapeIntegral> shape;
  while (current && current->size() > 1) {
    auto r = traced(trace, [&] { return reduce_step_A(*current, opts); });
    trace.steps.push_back(r.step);
    current = r.reduced;
    shape = r.shape;
  }
  if (current) {
    TraceStep step;
    out.nf = terminal_one(*current, step);
    trace.steps.push_back(step);
  } else {
    while (shape->prefix() > 0) {
      auto r = traced(trace, [&] { return reduce_step_B(*shape, opts); });
      trace.steps.push_back(r.step);
      shape = r.reduced;
    }
    TraceStep step;
    out.nf = traced(trace, [&] { return terminal_two(*shape, step, opts); });
    trace.steps.push_back(step);
  }
  auto& last = trace.steps.back();
  last.objects.emplace_back("p", out.nf.p.str());
  last.objects.emplace_back("q", out.nf.q.str());
  last.objects.emplace_back("theta_hat", out.nf.theta_hat.str());

  out.equivalence = traced(trace, [&] {
    const IntegralFamily original(q);
    const auto reduced = normal_form_family(out.nf);
    const auto xs = chebyshev_points(original.interval(), opts.grid_points);
    WorkingBox box_a{std::vector<Interval>(original.param_dim(), opts.box)};
    WorkingBox box_b{std::vector<Interval>(1, opts.box)};
    return check_equivalence(original, *reduced, xs,
                             box_a.sample(opts.tol.sample_count, salted(opts, 97)),
                             box_b.sample(opts.tol.sample_count, salted(opts, 98)), opts.tol);
  });
  if (!out.equivalence.equivalent) {
    throw ReductionError("normal form is not equivalent to the input: " + out.equivalence.diagnostic,
                         trace);
  }
  return out;
}

}  // namespace quadratura
