#include "quadratura/eval.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "quadratura/errors.hpp"

namespace quadratura {

namespace {

[[noreturn]] void domain_error(const char* what) { throw EvalError(what); }

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite value in ") + what);
  return v;
}

double rational_power(double base, std::int64_t num, std::int64_t den, double exponent) {
  if (base == 0.0 && num < 0) domain_error("division by zero in negative power");
  if (den == 1) return std::pow(base, static_cast<double>(num));
  if (base >= 0.0) return std::pow(base, exponent);
  if (den % 2 == 0) domain_error("even root of a negative number");
  const double mag = std::pow(-base, exponent);
  return (num % 2 == 0) ? mag : -mag;
}


struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Adaptive bisection over a 15-point Gauss-Kronrod rule, each panel mapped
// to [-1, 1] so error estimates stay in the panel's own units. A panel is
// accepted when its error is within the relative tolerance of its L1 norm
// or within its share (by length) of the absolute tolerance.
template <class F>
QuadResult adaptive_gk(F& f, double lo, double hi, double tol) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  constexpr int kMaxDepth = 30;
  constexpr int kMaxPanels = 2000;
  const double total = hi - lo;
  QuadResult out;
  int panels = 0;
  auto panel = [&](auto&& self, double a, double b, int depth) -> void {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto mapped = [&](double tau) { return half * f(mid + half * tau); };
    double err = 0.0, l1 = 0.0;
    const double v = Rule::integrate(mapped, -1.0, 1.0, 0, tol, &err, &l1);
    ++panels;
    const double budget = std::max(tol * l1, 50.0 * std::numeric_limits<double>::epsilon() * l1) +
                          tol * (b - a) / total;
    if (err <= budget || depth >= kMaxDepth || panels >= kMaxPanels) {
      out.value += v;
      out.error += err;
      out.l1 += l1;
      return;
    }
    self(self, a, mid, depth + 1);
    self(self, mid, b, depth + 1);
  };
  panel(panel, lo, hi, 0);
  return out;
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> arguments)
    : arity_(arguments.size()), slot_count_(arguments.size()) {
  // Repeated argument names resolve to the last position.
  std::map<std::string, int> slots;
  for (std::size_t i = 0; i < arguments.size(); ++i) slots[arguments[i]] = static_cast<int>(i);
  for (const auto& v : e.free_variables()) {
    if (!slots.contains(v)) throw EvalError("unbound variable '" + v + "'");
  }
  root_ = build(e, slots);
}

int CompiledExpr::build(const Expr& e, std::map<std::string, int>& slots) {
  Node n{e.op()};
  switch (e.op()) {
    case Op::Const:
      n.value = e.value();
      break;
    case Op::Var:
      n.slot = slots.at(e.name());
      break;
    case Op::Pow: {
      const Rational r = e.exponent();
      n.exp_num = r.num();
      n.exp_den = r.den();
      n.exponent = r.value();
      n.kids[0] = build(e.child(0), slots);
      break;
    }
    case Op::Quad: {
      n.kids[0] = build(e.child(0), slots);
      n.kids[1] = build(e.child(1), slots);
      auto it = slots.find(e.name());
      if (it == slots.end()) {
        it = slots.emplace(e.name(), static_cast<int>(slot_count_++)).first;
      }
      n.slot = it->second;
      n.kids[2] = build(e.child(2), slots);
      break;
    }
    default:
      for (std::size_t i = 0; i < e.arity(); ++i) n.kids[i] = build(e.child(i), slots);
  }
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size() - 1);
}

double CompiledExpr::eval(std::span<const double> args, double quad_tol) const {
  if (args.size() != arity_) throw PreconditionError("argument count mismatch");
  std::vector<double> slots(slot_count_, 0.0);
  std::copy(args.begin(), args.end(), slots.begin());
  return run(root_, slots, quad_tol);
}

double CompiledExpr::run(int index, std::vector<double>& slots, double quad_tol) const {
  const Node& n = nodes_[static_cast<std::size_t>(index)];
  auto kid = [&](int k) { return run(n.kids[k], slots, quad_tol); };
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return slots[static_cast<std::size_t>(n.slot)];
    case Op::Add:
      return checked(kid(0) + kid(1), "addition");
    case Op::Sub:
      return checked(kid(0) - kid(1), "subtraction");
    case Op::Mul:
      return checked(kid(0) * kid(1), "multiplication");
    case Op::Div: {
      const double a = kid(0);
      const double b = kid(1);
      if (b == 0.0) domain_error("division by zero");
      return checked(a / b, "division");
    }
    case Op::Neg:
      return -kid(0);
    case Op::Pow:
      return checked(rational_power(kid(0), n.exp_num, n.exp_den, n.exponent), "power");
    case Op::Exp:
      return checked(std::exp(kid(0)), "exp");
    case Op::Log: {
      const double a = kid(0);
      if (!(a > 0.0)) domain_error("log of a non-positive number");
      return std::log(a);
    }
    case Op::Sin:
      return std::sin(kid(0));
    case Op::Cos:
      return std::cos(kid(0));
    case Op::Sqrt: {
      const double a = kid(0);
      if (a < 0.0) domain_error("sqrt of a negative number");
      return std::sqrt(a);
    }
    case Op::Quad: {
      const double lo = kid(0);
      const double hi = kid(1);
      if (lo == hi) return 0.0;
      const auto slot = static_cast<std::size_t>(n.slot);
      const double saved = slots[slot];
      auto body = [&](double t) {
        slots[slot] = t;
        return run(n.kids[2], slots, quad_tol);
      };
      const auto r = adaptive_gk(body, std::min(lo, hi), std::max(lo, hi), quad_tol);
      slots[slot] = saved;
      const double allowed =
          std::max(100.0 * quad_tol * r.l1, 1e3 * std::numeric_limits<double>::epsilon() * r.l1) + quad_tol;
      if (!std::isfinite(r.value) || r.error > allowed) {
        throw EvalError("quadrature did not converge (error estimate " + format_number(r.error) + ")");
      }
      const double value = r.value;
      return lo < hi ? value : -value;
    }
  }
  return 0.0;
}

double eval_expr(const Expr& e, const Env& env, const ToleranceConfig& tol) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& v : e.free_variables()) {
    auto it = env.find(v);
    if (it == env.end()) throw EvalError("unbound variable '" + v + "'");
    names.push_back(v);
    values.push_back(it->second);
  }
  return CompiledExpr(e, names).eval(values, tol.ode_tol);
}

}  // namespace quadratura
