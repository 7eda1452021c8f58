#pragma once

#include <string_view>

#include "quadratura/expr.hpp"

namespace quadratura {

/// Parses the expression DSL.
///
/// Precedence, tightest first: `^` (right-associative), unary minus, `* /`,
/// `+ -`. Functions: exp, log, sin, cos, sqrt and the definite integral
/// `quad(bound, lower, upper, body)`. The exponent of `^` must reduce to a
/// rational constant. A minus sign directly in front of a numeric literal
/// (not followed by `^`) folds into a negative constant.
///
/// Throws ParseError carrying the offending character offset.
Expr parse_expr(std::string_view text);

}  // namespace quadratura
