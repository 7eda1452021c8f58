#include "quadratura/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "quadratura/errors.hpp"

namespace quadratura {

// ---------------------------------------------------------------- Rational

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) throw PreconditionError("rational exponent with zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Rational operator+(Rational a, Rational b) {
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}
Rational operator-(Rational a, Rational b) { return a + (-b); }
Rational operator*(Rational a, Rational b) { return Rational(a.num_ * b.num_, a.den_ * b.den_); }
Rational operator/(Rational a, Rational b) {
  if (b.num_ == 0) throw PreconditionError("rational division by zero");
  return Rational(a.num_ * b.den_, a.den_ * b.num_);
}

// ---------------------------------------------------------------- Node

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  Rational exponent;
  std::vector<Expr> kids;
};

namespace {

bool is_unary(Op op) {
  switch (op) {
    case Op::Neg:
    case Op::Exp:
    case Op::Log:
    case Op::Sin:
    case Op::Cos:
    case Op::Sqrt:
      return true;
    default:
      return false;
  }
}

bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  if (name.empty()) throw PreconditionError("empty variable name");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr child) {
  if (!is_unary(op)) throw PreconditionError("not a unary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->kids.push_back(std::move(child));
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw PreconditionError("not a binary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->kids.push_back(std::move(lhs));
  n->kids.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, Rational exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->kids.push_back(std::move(base));
  return Expr(std::move(n));
}

Expr Expr::quad(std::string bound, Expr lower, Expr upper, Expr body) {
  if (bound.empty()) throw PreconditionError("empty integration variable");
  if (body.binds(bound)) {
    throw PreconditionError("integration variable '" + bound +
                            "' is re-bound inside its own integrand");
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Quad;
  n->name = std::move(bound);
  n->kids.push_back(std::move(lower));
  n->kids.push_back(std::move(upper));
  n->kids.push_back(std::move(body));
  return Expr(std::move(n));
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::value() const noexcept { return node_->value; }
const std::string& Expr::name() const noexcept { return node_->name; }
Rational Expr::exponent() const noexcept { return node_->exponent; }
std::size_t Expr::arity() const noexcept { return node_->kids.size(); }
const Expr& Expr::child(std::size_t i) const { return node_->kids.at(i); }

namespace {

void collect_free(const Expr& e, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (e.op()) {
    case Op::Const:
      return;
    case Op::Var:
      if (!bound.contains(e.name())) out.insert(e.name());
      return;
    case Op::Quad: {
      collect_free(e.child(0), bound, out);
      collect_free(e.child(1), bound, out);
      const bool inserted = bound.insert(e.name()).second;
      collect_free(e.child(2), bound, out);
      if (inserted) bound.erase(e.name());
      return;
    }
    default:
      for (std::size_t i = 0; i < e.arity(); ++i) collect_free(e.child(i), bound, out);
  }
}

void collect_all(const Expr& e, std::set<std::string>& out) {
  if (e.op() == Op::Var || e.op() == Op::Quad) out.insert(e.name());
  for (std::size_t i = 0; i < e.arity(); ++i) collect_all(e.child(i), out);
}

}  // namespace

std::set<std::string> Expr::free_variables() const {
  std::set<std::string> bound, out;
  collect_free(*this, bound, out);
  return out;
}

std::set<std::string> Expr::all_symbols() const {
  std::set<std::string> out;
  collect_all(*this, out);
  return out;
}

bool Expr::binds(const std::string& symbol) const {
  if (op() == Op::Quad && name() == symbol) return true;
  for (const auto& k : node_->kids)
    if (k.binds(symbol)) return true;
  return false;
}

bool Expr::depends_on(const std::string& symbol) const {
  return free_variables().contains(symbol);
}

std::size_t Expr::quad_count() const {
  std::size_t n = op() == Op::Quad ? 1 : 0;
  for (const auto& k : node_->kids) n += k.quad_count();
  return n;
}

std::size_t Expr::depth() const {
  std::size_t d = 0;
  for (const auto& k : node_->kids) d = std::max(d, k.depth());
  return d + 1;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.op != y.op || x.kids.size() != y.kids.size()) return false;
  switch (x.op) {
    case Op::Const:
      return x.value == y.value;
    case Op::Var:
      return x.name == y.name;
    case Op::Pow:
      if (!(x.exponent == y.exponent)) return false;
      break;
    case Op::Quad:
      if (x.name != y.name) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < x.kids.size(); ++i)
    if (!(x.kids[i] == y.kids[i])) return false;
  return true;
}

// ---------------------------------------------------------------- printing

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

// Binding strength used by the printer; larger binds tighter.
int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Const:
      return std::signbit(e.value()) ? 3 : 5;
    default:
      return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const:
      out += format_number(e.value());
      return;
    case Op::Var:
      out += e.name();
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(e);
      print_wrapped(e.child(0), precedence(e.child(0)) < p, out);
      out += e.op() == Op::Add ? '+' : e.op() == Op::Sub ? '-' : e.op() == Op::Mul ? '*' : '/';
      print_wrapped(e.child(1), precedence(e.child(1)) <= p, out);
      return;
    }
    case Op::Neg: {
      const Expr& c = e.child(0);
      out += '-';
      // A bare non-negative literal after '-' would fold into a negative constant.
      const bool wrap = precedence(c) < 3 || (c.is_constant() && !std::signbit(c.value()));
      print_wrapped(c, wrap, out);
      return;
    }
    case Op::Pow: {
      print_wrapped(e.child(0), precedence(e.child(0)) <= 4, out);
      out += '^';
      const Rational r = e.exponent();
      if (r.is_integer() && r.num() >= 0) {
        out += std::to_string(r.num());
      } else if (r.is_integer()) {
        out += "(" + std::to_string(r.num()) + ")";
      } else {
        out += "(" + std::to_string(r.num()) + "/" + std::to_string(r.den()) + ")";
      }
      return;
    }
    case Op::Exp:
    case Op::Log:
    case Op::Sin:
    case Op::Cos:
    case Op::Sqrt:
      out += function_name(e.op());
      out += '(';
      print(e.child(0), out);
      out += ')';
      return;
    case Op::Quad:
      out += "quad(";
      out += e.name();
      out += ',';
      print(e.child(0), out);
      out += ',';
      print(e.child(1), out);
      out += ',';
      print(e.child(2), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*this, out);
  return out;
}

// ---------------------------------------------------------------- builders

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr operator+(const Expr& a, double b) { return a + cst(b); }
Expr operator+(double a, const Expr& b) { return cst(a) + b; }
Expr operator-(const Expr& a, double b) { return a - cst(b); }
Expr operator-(double a, const Expr& b) { return cst(a) - b; }
Expr operator*(const Expr& a, double b) { return a * cst(b); }
Expr operator*(double a, const Expr& b) { return cst(a) * b; }
Expr operator/(const Expr& a, double b) { return a / cst(b); }
Expr operator/(double a, const Expr& b) { return cst(a) / b; }

Expr exp(const Expr& e) { return Expr::unary(Op::Exp, e); }
Expr log(const Expr& e) { return Expr::unary(Op::Log, e); }
Expr sin(const Expr& e) { return Expr::unary(Op::Sin, e); }
Expr cos(const Expr& e) { return Expr::unary(Op::Cos, e); }
Expr sqrt(const Expr& e) { return Expr::unary(Op::Sqrt, e); }
Expr pow(const Expr& base, Rational exponent) { return Expr::power(base, exponent); }
Expr quad(const std::string& bound, const Expr& lower, const Expr& upper, const Expr& body) {
  return Expr::quad(bound, lower, upper, body);
}
Expr var(const std::string& name) { return Expr::variable(name); }
Expr cst(double value) { return Expr::constant(value); }

std::string fresh_symbol(std::span<const Expr> exprs, const std::string& base) {
  std::set<std::string> used;
  for (const auto& e : exprs) {
    auto s = e.all_symbols();
    used.insert(s.begin(), s.end());
  }
  if (!used.contains(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + std::to_string(i);
    if (!used.contains(candidate)) return candidate;
  }
}

}  // namespace quadratura
