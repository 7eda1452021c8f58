#include "quadratura/calculus.hpp"

#include <cmath>
#include <vector>

#include "quadratura/errors.hpp"

namespace quadratura {

namespace {

bool mentions(const Expr& e, const std::string& v) {
  if (e.op() == Op::Var) return e.name() == v;
  for (std::size_t i = 0; i < e.arity(); ++i)
    if (mentions(e.child(i), v)) return true;
  return false;
}

// ---------------------------------------------------------------- substitution

Expr subst(const Expr& e, const Bindings& b, CapturePolicy policy);

Expr subst_quad(const Expr& e, const Bindings& b, CapturePolicy policy) {
  Expr lo = subst(e.child(0), b, policy);
  Expr hi = subst(e.child(1), b, policy);
  std::string bound = e.name();
  Expr body = e.child(2);

  Bindings inner;
  const auto body_free = body.free_variables();
  for (const auto& [k, r] : b) {
    if (k != bound && body_free.contains(k)) inner.emplace(k, r);
  }
  if (inner.empty()) return Expr::quad(bound, lo, hi, body);

  bool captures = false;
  bool clashes = false;
  for (const auto& [k, r] : inner) {
    if (r.depends_on(bound)) captures = true;
    if (r.binds(bound)) clashes = true;
  }
  if (captures && policy == CapturePolicy::Reject) {
    throw CaptureError("substitution would capture '" + bound + "' under an integral");
  }
  if (captures || clashes) {
    std::vector<Expr> pool{body, lo, hi};
    for (const auto& [k, r] : inner) {
      pool.push_back(r);
      pool.push_back(Expr::variable(k));
    }
    const std::string renamed = fresh_symbol(pool, bound);
    body = subst(body, {{bound, Expr::variable(renamed)}}, CapturePolicy::Rename);
    bound = renamed;
  }
  return Expr::quad(bound, lo, hi, subst(body, inner, policy));
}

Expr subst(const Expr& e, const Bindings& b, CapturePolicy policy) {
  switch (e.op()) {
    case Op::Const:
      return e;
    case Op::Var: {
      auto it = b.find(e.name());
      return it == b.end() ? e : it->second;
    }
    case Op::Quad:
      return subst_quad(e, b, policy);
    case Op::Pow:
      return Expr::power(subst(e.child(0), b, policy), e.exponent());
    default:
      if (e.arity() == 1) return Expr::unary(e.op(), subst(e.child(0), b, policy));
      return Expr::binary(e.op(), subst(e.child(0), b, policy), subst(e.child(1), b, policy));
  }
}

// ---------------------------------------------------------------- one-level rewriting
// Each helper assumes its operands are already simplified.

Expr mk_neg(const Expr& a) {
  if (a.is_constant()) return cst(-a.value());
  if (a.op() == Op::Neg) return a.child(0);
  return -a;
}

Expr mk_add(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return cst(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return a + b;
}

Expr mk_sub(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return cst(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return mk_neg(b);
  return a - b;
}

Expr mk_mul(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return cst(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return cst(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return mk_neg(b);
  if (b.is_constant(-1.0)) return mk_neg(a);
  return a * b;
}

Expr mk_div(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return cst(a.value() / b.value());
  if (a.is_constant(0.0)) return cst(0.0);
  if (b.is_constant(1.0)) return a;
  return a / b;
}

Expr mk_pow(const Expr& base, Rational r) {
  if (r == Rational(1)) return base;
  if (r == Rational(0)) return cst(1.0);
  if (base.is_constant()) {
    const double v = base.value();
    const bool defined = (v > 0.0) || (v == 0.0 && r.num() > 0) || (v < 0.0 && r.den() % 2 == 1);
    if (defined) {
      double out = std::pow(std::fabs(v), r.value());
      if (v < 0.0 && r.num() % 2 != 0) out = -out;
      if (std::isfinite(out)) return cst(out);
    }
  }
  return pow(base, r);
}

Expr mk_unary(Op op, const Expr& a) {
  if (op == Op::Neg) return mk_neg(a);
  if (a.is_constant()) {
    const double v = a.value();
    switch (op) {
      case Op::Exp:
        if (std::isfinite(std::exp(v))) return cst(std::exp(v));
        break;
      case Op::Log:
        if (v > 0.0) return cst(std::log(v));
        break;
      case Op::Sin:
        return cst(std::sin(v));
      case Op::Cos:
        return cst(std::cos(v));
      case Op::Sqrt:
        if (v >= 0.0) return cst(std::sqrt(v));
        break;
      default:
        break;
    }
  }
  return Expr::unary(op, a);
}

Expr mk_quad(const std::string& bound, const Expr& lo, const Expr& hi, const Expr& body) {
  if (body.is_constant(0.0) || lo == hi) return cst(0.0);
  return Expr::quad(bound, lo, hi, body);
}

Expr mk_binary(Op op, const Expr& a, const Expr& b) {
  switch (op) {
    case Op::Add: return mk_add(a, b);
    case Op::Sub: return mk_sub(a, b);
    case Op::Mul: return mk_mul(a, b);
    default: return mk_div(a, b);
  }
}

// ---------------------------------------------------------------- differentiation

Expr diff(const Expr& e, const std::string& v) {
  if (!mentions(e, v)) return cst(0.0);
  switch (e.op()) {
    case Op::Const:
      return cst(0.0);
    case Op::Var:
      return cst(1.0);
    case Op::Add:
      return mk_add(diff(e.child(0), v), diff(e.child(1), v));
    case Op::Sub:
      return mk_sub(diff(e.child(0), v), diff(e.child(1), v));
    case Op::Mul: {
      const Expr& a = e.child(0);
      const Expr& b = e.child(1);
      return mk_add(mk_mul(diff(a, v), b), mk_mul(a, diff(b, v)));
    }
    case Op::Div: {
      const Expr& a = e.child(0);
      const Expr& b = e.child(1);
      return mk_sub(mk_div(diff(a, v), b), mk_div(mk_mul(a, diff(b, v)), pow(b, Rational(2))));
    }
    case Op::Neg:
      return mk_neg(diff(e.child(0), v));
    case Op::Pow: {
      const Rational r = e.exponent();
      const Expr outer = mk_mul(cst(r.value()), mk_pow(e.child(0), r - Rational(1)));
      return mk_mul(outer, diff(e.child(0), v));
    }
    case Op::Exp:
      return mk_mul(e, diff(e.child(0), v));
    case Op::Log:
      return mk_div(diff(e.child(0), v), e.child(0));
    case Op::Sin:
      return mk_mul(cos(e.child(0)), diff(e.child(0), v));
    case Op::Cos:
      return mk_mul(mk_neg(sin(e.child(0))), diff(e.child(0), v));
    case Op::Sqrt:
      return mk_div(diff(e.child(0), v), mk_mul(cst(2.0), e));
    case Op::Quad: {
      const std::string& t = e.name();
      const Expr& lo = e.child(0);
      const Expr& hi = e.child(1);
      const Expr& body = e.child(2);
      Expr out = cst(0.0);
      if (mentions(hi, v)) {
        out = mk_mul(substitute(body, {{t, hi}}, CapturePolicy::Rename), diff(hi, v));
      }
      if (mentions(lo, v)) {
        out = mk_sub(out, mk_mul(substitute(body, {{t, lo}}, CapturePolicy::Rename), diff(lo, v)));
      }
      if (mentions(body, v)) out = mk_add(out, mk_quad(t, lo, hi, diff(body, v)));
      return out;
    }
  }
  return cst(0.0);
}

}  // namespace

Expr substitute(const Expr& e, const Bindings& bindings, CapturePolicy policy) {
  if (bindings.empty()) return e;
  return subst(e, bindings, policy);
}

Expr simplify(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var:
      return e;
    case Op::Pow:
      return mk_pow(simplify(e.child(0)), e.exponent());
    case Op::Quad:
      return mk_quad(e.name(), simplify(e.child(0)), simplify(e.child(1)), simplify(e.child(2)));
    default:
      if (e.arity() == 1) return mk_unary(e.op(), simplify(e.child(0)));
      return mk_binary(e.op(), simplify(e.child(0)), simplify(e.child(1)));
  }
}

Expr diff_expr(const Expr& e, const std::string& v) {
  if (e.binds(v)) {
    throw PreconditionError("cannot differentiate with respect to bound symbol '" + v + "'");
  }
  return simplify(diff(e, v));
}

}  // namespace quadratura
