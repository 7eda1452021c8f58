#include "quadratura/tolerance.hpp"

#include "quadratura/errors.hpp"

namespace quadratura {

void ToleranceConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw PreconditionError(std::string(name) + " must be strictly positive");
  };
  positive(ode_tol, "ode_tol");
  positive(diff_step_scale, "diff_step_scale");
  positive(constancy_tol, "constancy_tol");
  positive(rank_threshold, "rank_threshold");
  positive(equiv_tol, "equiv_tol");
  if (sample_count == 0) throw PreconditionError("sample_count must be at least 1");
  if (constancy_tol < 10.0 * ode_tol) {
    throw PreconditionError("constancy_tol must be at least 10 * ode_tol");
  }
}

}  // namespace quadratura
