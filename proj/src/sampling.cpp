#include "quadratura/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace quadratura {

std::vector<double> chebyshev_points(Interval range, std::size_t n) {
  if (n == 0) return {};
  const double mid = 0.5 * (range.lo + range.hi);
  const double half = 0.5 * (range.hi - range.lo);
  if (n == 1) return {mid};
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = mid - half * std::cos(std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(n - 1));
  }
  out.front() = range.lo;
  out.back() = range.hi;
  return out;
}

std::vector<std::vector<double>> latin_hypercube(std::span<const Interval> ranges,
                                                 std::size_t count, Rng& rng) {
  std::vector<std::vector<double>> out(count, std::vector<double>(ranges.size()));
  std::vector<std::size_t> strata(count);
  for (std::size_t d = 0; d < ranges.size(); ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    for (std::size_t i = count; i > 1; --i) std::swap(strata[i - 1], strata[rng.index(i)]);
    for (std::size_t i = 0; i < count; ++i) {
      const double u = (static_cast<double>(strata[i]) + rng.uniform01()) / static_cast<double>(count);
      out[i][d] = ranges[d].lo + u * ranges[d].length();
    }
  }
  return out;
}

}  // namespace quadratura
