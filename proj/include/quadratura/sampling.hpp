#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace quadratura {

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double length() const noexcept { return hi - lo; }
};

/// `n` Chebyshev-Lobatto points in [a, b], ascending, endpoints included.
std::vector<double> chebyshev_points(Interval range, std::size_t n);

/// Uniform doubles with a bit-exact, platform-independent mapping from the
/// underlying 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

/// Latin-hypercube sample of `count` points in the box spanned by `ranges`.
std::vector<std::vector<double>> latin_hypercube(std::span<const Interval> ranges,
                                                 std::size_t count, Rng& rng);

}  // namespace quadratura
