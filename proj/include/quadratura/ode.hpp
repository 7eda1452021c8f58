#pragma once

#include <functional>
#include <span>
#include <vector>

namespace quadratura {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState& y, OdeState& dydx, double x)>;

/// Solves y' = f(y, x), y(x0) = y0, and returns y at every point of `xs`
/// (any order, on either side of x0). Integration is restarted at each
/// breakpoint so piecewise-continuous right-hand sides are stepped over
/// cleanly. Adaptive Dormand-Prince with absolute and relative tolerance `tol`.
///
/// Throws EvalError if the step-size controller stalls.
std::vector<OdeState> integrate_at(const OdeRhs& f, double x0, const OdeState& y0,
                                   std::span<const double> xs,
                                   std::span<const double> breakpoints, double tol);

}  // namespace quadratura
