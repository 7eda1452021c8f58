#include "quadratura/parse.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <vector>

#include "quadratura/errors.hpp"

namespace quadratura {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string_view text;
  double number = 0.0;
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && is_digit(s[j])) {
          i = j;
          while (i < s.size() && is_digit(s[i])) ++i;
        } else {
          throw ParseError("malformed exponent in numeric literal", i);
        }
      }
      Token t{Tok::Number, start, s.substr(start, i - start)};
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
        throw ParseError("invalid numeric literal", start);
      out.push_back(t);
      continue;
    }
    if (is_lower(c)) {
      while (i < s.size() && (is_lower(s[i]) || is_digit(s[i]))) ++i;
      out.push_back({Tok::Ident, start, s.substr(start, i - start)});
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '^': kind = Tok::Caret; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({kind, start, s.substr(start, 1)});
    ++i;
  }
  out.push_back({Tok::End, s.size(), {}});
  return out;
}

bool is_reserved(std::string_view name) {
  return name == "exp" || name == "log" || name == "sin" || name == "cos" || name == "sqrt" ||
         name == "quad";
}

std::optional<Rational> rational_from_double(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  if (v == std::floor(v) && std::fabs(v) < 9e15) return Rational(static_cast<std::int64_t>(v));
  // Continued-fraction convergents; accept the first that reproduces v exactly.
  double x = v;
  std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  for (int iter = 0; iter < 40; ++iter) {
    const double a = std::floor(x);
    if (std::fabs(a) > 1e12) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h0 + h1;
    const std::int64_t k2 = ai * k0 + k1;
    h1 = h0;
    h0 = h2;
    k1 = k0;
    k0 = k2;
    if (k0 > 1000000000) break;
    if (static_cast<double>(h0) / static_cast<double>(k0) == v) return Rational(h0, k0);
    const double frac = x - a;
    if (frac == 0.0) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

std::optional<Rational> to_rational(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
      return rational_from_double(e.value());
    case Op::Neg: {
      auto r = to_rational(e.child(0));
      if (!r) return std::nullopt;
      return -*r;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      auto a = to_rational(e.child(0));
      auto b = to_rational(e.child(1));
      if (!a || !b) return std::nullopt;
      if (e.op() == Op::Add) return *a + *b;
      if (e.op() == Op::Sub) return *a - *b;
      if (e.op() == Op::Mul) return *a * *b;
      if (b->num() == 0) return std::nullopt;
      return *a / *b;
    }
    case Op::Pow: {
      auto a = to_rational(e.child(0));
      const Rational r = e.exponent();
      if (!a || !r.is_integer() || std::llabs(r.num()) > 64) return std::nullopt;
      if (a->num() == 0 && r.num() < 0) return std::nullopt;
      Rational acc(1);
      for (std::int64_t i = 0; i < std::llabs(r.num()); ++i) acc = acc * *a;
      return r.num() < 0 ? Rational(1) / acc : acc;
    }
    default:
      return std::nullopt;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  Expr parse() {
    Expr e = parse_sum();
    if (peek().kind != Tok::End) throw ParseError("unexpected trailing input", peek().pos);
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(index_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[index_ < tokens_.size() - 1 ? index_++ : index_]; }
  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) throw ParseError(std::string("expected ") + what, peek().pos);
    next();
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = next().kind == Tok::Plus ? Op::Add : Op::Sub;
      lhs = Expr::binary(op, lhs, parse_product());
    }
    return lhs;
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = next().kind == Tok::Star ? Op::Mul : Op::Div;
      lhs = Expr::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek().kind != Tok::Minus) return parse_pow();
    next();
    if (peek().kind == Tok::Number && peek(1).kind != Tok::Caret) {
      return Expr::constant(-next().number);
    }
    return Expr::unary(Op::Neg, parse_unary());
  }

  Expr parse_pow() {
    Expr base = parse_primary();
    if (peek().kind != Tok::Caret) return base;
    next();
    const std::size_t pos = peek().pos;
    Expr exponent = parse_unary();
    auto r = to_rational(exponent);
    if (!r) throw ParseError("exponent must be a rational constant", pos);
    return Expr::power(base, *r);
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        next();
        return Expr::constant(t.number);
      case Tok::LParen: {
        next();
        Expr e = parse_sum();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident:
        return parse_identifier();
      case Tok::End:
        throw ParseError("unexpected end of input", t.pos);
      default:
        throw ParseError("unexpected token '" + std::string(t.text) + "'", t.pos);
    }
  }

  Expr parse_identifier() {
    const Token id = next();
    const std::string name(id.text);
    if (peek().kind != Tok::LParen) {
      if (is_reserved(name)) throw ParseError("reserved name '" + name + "' used as a variable", id.pos);
      return Expr::variable(name);
    }
    next();
    std::vector<Expr> args;
    std::vector<std::size_t> arg_pos;
    if (peek().kind != Tok::RParen) {
      for (;;) {
        arg_pos.push_back(peek().pos);
        args.push_back(parse_sum());
        if (peek().kind != Tok::Comma) break;
        next();
      }
    }
    expect(Tok::RParen, "')'");

    auto unary = [&](Op op) {
      if (args.size() != 1)
        throw ParseError(name + " expects 1 argument, got " + std::to_string(args.size()), id.pos);
      return Expr::unary(op, args[0]);
    };
    if (name == "exp") return unary(Op::Exp);
    if (name == "log") return unary(Op::Log);
    if (name == "sin") return unary(Op::Sin);
    if (name == "cos") return unary(Op::Cos);
    if (name == "sqrt") return unary(Op::Sqrt);
    if (name == "quad") {
      if (args.size() != 4)
        throw ParseError("quad expects 4 arguments, got " + std::to_string(args.size()), id.pos);
      if (args[0].op() != Op::Var)
        throw ParseError("first argument of quad must be the integration variable", arg_pos[0]);
      try {
        return Expr::quad(args[0].name(), args[1], args[2], args[3]);
      } catch (const PreconditionError& err) {
        throw ParseError(err.what(), id.pos);
      }
    }
    throw ParseError("unknown function '" + name + "'", id.pos);
  }

  std::vector<Token> tokens_;
  std::size_t index_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

}  // namespace quadratura
