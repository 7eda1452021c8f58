#pragma once

#include <cstddef>
#include <cstdint>

namespace quadratura {

/// Numeric policy shared by every sampled check in the library.
///
/// All tolerances must be strictly positive and constancy_tol must be at
/// least ten times ode_tol: a quantity derived from ODE/quadrature output
/// cannot be flatter than the noise it was computed with.
struct ToleranceConfig {
  double ode_tol = 1e-10;          // relative + absolute, ODE and quadrature
  double diff_step_scale = 1e-5;   // central-difference step, scaled by max(1, |arg|)
  double constancy_tol = 1e-6;     // max deviation accepted as "constant"
  double rank_threshold = 1e-6;    // relative smallest singular value cutoff
  double equiv_tol = 1e-6;         // family agreement on the sampled grid
  std::size_t sample_count = 10;   // points per sampling box
  std::uint64_t seed = 0x5eed2024; // sampling seed, echoed in reports

  /// Throws PreconditionError when the invariants above do not hold.
  void validate() const;
};

}  // namespace quadratura
