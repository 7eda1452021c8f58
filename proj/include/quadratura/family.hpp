#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quadratura/sampling.hpp"
#include "quadratura/tolerance.hpp"

namespace quadratura {

/// Per-parameter sampling ranges. Every range contains 0.
struct WorkingBox {
  std::vector<Interval> params;

  static WorkingBox uniform(std::size_t n, double lo = -2.0, double hi = 2.0);
  std::size_t size() const noexcept { return params.size(); }
  /// Throws PreconditionError on an empty range or one excluding 0.
  void validate() const;
  /// Latin-hypercube sample of `count` parameter vectors.
  std::vector<std::vector<double>> sample(std::size_t count, std::uint64_t seed) const;
};

/// A family of functions f(x, c) on an interval, c in R^param_dim.
class Family {
 public:
  virtual ~Family() = default;

  virtual std::size_t param_dim() const = 0;
  virtual double base_point() const = 0;
  virtual Interval interval() const = 0;
  /// f(x, c) for every x in xs.
  virtual std::vector<double> values(std::span<const double> xs, std::span<const double> c,
                                     const ToleranceConfig& tol) const = 0;
  /// grads[i][k] = d f(xs[i], c) / d c_k. Central differences unless overridden.
  virtual std::vector<std::vector<double>> param_gradients(std::span<const double> xs,
                                                           std::span<const double> c,
                                                           const ToleranceConfig& tol) const;

  double value(double x, std::span<const double> c, const ToleranceConfig& tol) const;
};

using FamilyPtr = std::shared_ptr<const Family>;

/// Family given by a plain callable.
class FunctionFamily final : public Family {
 public:
  using Fn = std::function<double(double x, std::span<const double> c)>;

  FunctionFamily(Fn fn, std::size_t param_dim, double x0, Interval interval);

  std::size_t param_dim() const override { return dim_; }
  double base_point() const override { return x0_; }
  Interval interval() const override { return interval_; }
  std::vector<double> values(std::span<const double> xs, std::span<const double> c,
                             const ToleranceConfig& tol) const override;

 private:
  Fn fn_;
  std::size_t dim_;
  double x0_;
  Interval interval_;
};

/// One-parameter restriction d -> base(x, 0, ..., 0, d).
class SliceFamily final : public Family {
 public:
  explicit SliceFamily(FamilyPtr base);

  std::size_t param_dim() const override { return 1; }
  double base_point() const override { return base_->base_point(); }
  Interval interval() const override { return base_->interval(); }
  std::vector<double> values(std::span<const double> xs, std::span<const double> c,
                             const ToleranceConfig& tol) const override;
  std::vector<std::vector<double>> param_gradients(std::span<const double> xs,
                                                   std::span<const double> c,
                                                   const ToleranceConfig& tol) const override;

 private:
  std::vector<double> full(std::span<const double> c) const;
  FamilyPtr base_;
};

/// Normalized cross-partial defect
///   |d_i f(x,c) d_j f(x0,c) - d_j f(x,c) d_i f(x0,c)| / max(1, |products|)
/// maximized over xs and cs. Indices are 0-based and must differ.
double fundamental_equality_residual(const Family& fam, std::size_t i, std::size_t j,
                                     std::span<const double> xs,
                                     std::span<const std::vector<double>> cs,
                                     const ToleranceConfig& tol);

struct MatchedPair {
  bool forward = true;  // true: A's sample matched in B; false: B's sample matched in A
  std::vector<double> source;
  std::vector<double> matched;
  double gap = 0.0;
  bool attained = true;
};

struct EquivalenceReport {
  bool equivalent = false;
  double max_gap = 0.0;
  double gap_forward = 0.0;
  double gap_backward = 0.0;
  std::vector<MatchedPair> pairs;
  std::string diagnostic;
};

/// Grid test of family equivalence. Each sample of one family is matched
/// in the other by bisection on its last parameter (all others 0) so the
/// values at the base point agree; the gap is the max difference over xs.
/// Both directions are checked.
EquivalenceReport check_equivalence(const Family& a, const Family& b, std::span<const double> xs,
                                    std::span<const std::vector<double>> samples_a,
                                    std::span<const std::vector<double>> samples_b,
                                    const ToleranceConfig& tol);

struct EffectiveParameterReport {
  bool passed = false;
  double max_residual = 0.0;       // over all parameter pairs
  double reconstruction_gap = 0.0;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> pair_residuals;
  std::string diagnostic;
};

/// Conjunction of pairwise Fundamental Equality residuals below
/// constancy_tol and reconstruction of fam from its last-parameter slice
/// within equiv_tol.
EffectiveParameterReport effective_parameter_test(const FamilyPtr& fam, std::span<const double> xs,
                                                  std::span<const std::vector<double>> cs,
                                                  const ToleranceConfig& tol);

/// 33 Chebyshev points in the family's interval.
std::vector<double> default_grid(const Family& fam, std::size_t n = 33);

}  // namespace quadratura
