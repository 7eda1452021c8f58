#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "quadratura/expr.hpp"
#include "quadratura/tolerance.hpp"

namespace quadratura {

using Env = std::map<std::string, double>;

/// An Expr resolved against a fixed ordered list of argument names.
///
/// Compilation resolves every variable to a slot once; evaluation is then a
/// walk over an index-linked node array. Quad nodes are integrated with
/// adaptive Gauss-Kronrod at the relative tolerance passed to eval().
/// Instances are immutable and may be shared across threads.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  /// Throws EvalError if a free variable of `e` is not among `arguments`.
  CompiledExpr(const Expr& e, std::span<const std::string> arguments);

  double eval(std::span<const double> args, double quad_tol) const;
  std::size_t arity() const noexcept { return arity_; }
  bool empty() const noexcept { return nodes_.empty(); }

 private:
  struct Node {
    Op op;
    double value = 0.0;
    double exponent = 0.0;
    std::int64_t exp_num = 0;
    std::int64_t exp_den = 1;
    int slot = -1;
    int kids[3] = {-1, -1, -1};
  };

  int build(const Expr& e, std::map<std::string, int>& slots);
  double run(int index, std::vector<double>& slots, double quad_tol) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t arity_ = 0;
  std::size_t slot_count_ = 0;
};

/// Evaluates `e` with every free variable bound by `env`. Extra bindings are ignored.
double eval_expr(const Expr& e, const Env& env, const ToleranceConfig& tol);

}  // namespace quadratura
