#include "quadratura/ode.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <map>
#include <stdexcept>

#include "quadratura/errors.hpp"

namespace quadratura {

namespace odeint = boost::numeric::odeint;

namespace {

// Integrates from x0 through the strictly monotone `stops` (all on one side
// of x0), recording the state at each stop.
void sweep(const OdeRhs& f, double x0, OdeState y, const std::vector<double>& stops,
           std::span<const double> breakpoints, double tol, std::map<double, OdeState>& out) {
  if (stops.empty()) return;
  const bool forward = stops.front() > x0;
  const double end = stops.back();

  std::vector<double> segment_ends;
  for (double b : breakpoints) {
    if (forward ? (b > x0 && b < end) : (b < x0 && b > end)) segment_ends.push_back(b);
  }
  std::sort(segment_ends.begin(), segment_ends.end());
  if (!forward) std::reverse(segment_ends.begin(), segment_ends.end());
  segment_ends.push_back(end);

  auto stop_it = stops.begin();
  double start = x0;
  for (double seg_end : segment_ends) {
    std::vector<double> times{start};
    while (stop_it != stops.end() && (forward ? *stop_it < seg_end : *stop_it > seg_end)) {
      times.push_back(*stop_it++);
    }
    if (stop_it != stops.end() && *stop_it == seg_end) ++stop_it;
    times.push_back(seg_end);
    times.erase(std::unique(times.begin(), times.end()), times.end());

    if (times.size() > 1) {
      auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<OdeState>());
      const double span = std::fabs(times.back() - times.front());
      const double dt = (forward ? 1.0 : -1.0) * std::max(span * 1e-3, 1e-12);
      auto observer = [&](const OdeState& state, double t) { out[t] = state; };
      try {
        odeint::integrate_times(stepper, f, y, times.begin(), times.end(), dt, observer,
                                odeint::max_step_checker(200000));
      } catch (const odeint::step_adjustment_error& e) {
        throw EvalError(std::string("ODE step-size control failed: ") + e.what());
      } catch (const odeint::no_progress_error& e) {
        throw EvalError(std::string("ODE integration made no progress: ") + e.what());
      } catch (const std::overflow_error& e) {
        throw EvalError(std::string("ODE integration exceeded its step budget: ") + e.what());
      }
    }
    start = seg_end;
  }
}

}  // namespace

std::vector<OdeState> integrate_at(const OdeRhs& f, double x0, const OdeState& y0,
                                   std::span<const double> xs,
                                   std::span<const double> breakpoints, double tol) {
  std::vector<double> ahead, behind;
  for (double x : xs) {
    if (x > x0) ahead.push_back(x);
    if (x < x0) behind.push_back(x);
  }
  std::sort(ahead.begin(), ahead.end());
  ahead.erase(std::unique(ahead.begin(), ahead.end()), ahead.end());
  std::sort(behind.begin(), behind.end(), std::greater<>());
  behind.erase(std::unique(behind.begin(), behind.end()), behind.end());

  std::map<double, OdeState> states;
  states[x0] = y0;
  sweep(f, x0, y0, ahead, breakpoints, tol, states);
  sweep(f, x0, y0, behind, breakpoints, tol, states);

  std::vector<OdeState> out;
  out.reserve(xs.size());
  for (double x : xs) {
    for (double v : states.at(x)) {
      if (!std::isfinite(v)) throw EvalError("ODE solution became non-finite");
    }
    out.push_back(states.at(x));
  }
  return out;
}

}  // namespace quadratura
