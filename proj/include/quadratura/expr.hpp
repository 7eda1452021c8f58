#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace quadratura {

enum class Op : std::uint8_t {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Exp,
  Log,
  Sin,
  Cos,
  Sqrt,
  Quad,  // definite integral: bound symbol, lower, upper, body
};

/// Exponent of a pow node. Always normalized: den > 0, gcd(num, den) == 1.
class Rational {
 public:
  Rational(std::int64_t num = 0, std::int64_t den = 1);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const noexcept { return den_ == 1; }

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator/(Rational a, Rational b);
  friend Rational operator-(Rational a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(Rational a, Rational b) = default;

 private:
  std::int64_t num_;
  std::int64_t den_;
};

/// Immutable expression tree over named real variables.
///
/// Nodes are shared; copying an Expr is cheap. Quad nodes bind a symbol in
/// their body only. A bound symbol may not be re-bound by a nested Quad in
/// its own body; construction rejects such trees.
class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(Op op, Expr child);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr power(Expr base, Rational exponent);
  static Expr quad(std::string bound, Expr lower, Expr upper, Expr body);

  Op op() const noexcept;
  double value() const noexcept;           // Const
  const std::string& name() const noexcept;  // Var name or Quad bound symbol
  Rational exponent() const noexcept;      // Pow
  std::size_t arity() const noexcept;
  const Expr& child(std::size_t i) const;  // Quad: 0 lower, 1 upper, 2 body

  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }

  /// Variables an evaluation environment must bind.
  std::set<std::string> free_variables() const;
  /// Every symbol appearing anywhere, free or bound.
  std::set<std::string> all_symbols() const;
  /// True if some Quad node in this tree binds `symbol`.
  bool binds(const std::string& symbol) const;
  bool depends_on(const std::string& symbol) const;

  /// Number of Quad nodes in the tree.
  std::size_t quad_count() const;
  std::size_t depth() const;

  /// DSL text; parse_expr(e.str()) == e.
  std::string str() const;

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

  const void* identity() const noexcept { return node_.get(); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);
Expr operator/(double a, const Expr& b);

Expr exp(const Expr& e);
Expr log(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr sqrt(const Expr& e);
Expr pow(const Expr& base, Rational exponent);
Expr quad(const std::string& bound, const Expr& lower, const Expr& upper, const Expr& body);
Expr var(const std::string& name);
Expr cst(double value);

/// Shortest decimal text that reads back to exactly `value`.
std::string format_number(double value);

/// A symbol of the form base, base1, base2, ... that occurs in none of `exprs`.
std::string fresh_symbol(std::span<const Expr> exprs, const std::string& base = "t");

using Bindings = std::map<std::string, Expr>;

}  // namespace quadratura
