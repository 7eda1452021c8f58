#pragma once

#include <string>

#include "quadratura/expr.hpp"

namespace quadratura {

/// How substitution treats a replacement whose free variables would be
/// captured by an integral binder.
enum class CapturePolicy {
  Reject,  // throw CaptureError
  Rename,  // alpha-rename the binder to a fresh symbol
};

/// Simultaneous substitution of free occurrences. The result is not simplified.
Expr substitute(const Expr& e, const Bindings& bindings,
                CapturePolicy policy = CapturePolicy::Reject);

/// Conservative local rewriting: constant folding, additive and
/// multiplicative identities, e^0, integrals of a zero body or over an
/// empty range. Never reorders or expands.
Expr simplify(const Expr& e);

/// Symbolic partial derivative with respect to a free variable. Quad nodes
/// follow the Leibniz rule. The result is simplified.
///
/// Throws PreconditionError if `v` is bound by some integral in `e`.
Expr diff_expr(const Expr& e, const std::string& v);

}  // namespace quadratura
