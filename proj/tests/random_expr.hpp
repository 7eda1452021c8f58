#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "quadratura/expr.hpp"
#include "quadratura/sampling.hpp"

namespace quadratura::testing {

/// Random smooth expressions over `vars`. Arguments of log and sqrt are kept
/// positive and denominators bounded away from zero, so every generated tree
/// evaluates anywhere in [-1, 1]^n. At most one quad node per tree.
class RandomExprGen {
 public:
  RandomExprGen(std::uint64_t seed, std::vector<std::string> vars)
      : rng_(seed), vars_(std::move(vars)) {}

  Expr generate(int depth) {
    quad_left_ = 1;
    return node(depth, vars_);
  }

 private:
  Expr leaf(const std::vector<std::string>& vars) {
    if (rng_.uniform01() < 0.6) return var(vars[rng_.index(vars.size())]);
    return cst(std::round(rng_.uniform(-3.0, 3.0) * 4.0) / 4.0);
  }

  Expr positive(const Expr& a) { return a * a + 1.0; }

  Expr node(int depth, const std::vector<std::string>& vars) {
    if (depth <= 1 || rng_.uniform01() < 0.15) return leaf(vars);
    const int d = depth - 1;
    switch (rng_.index(quad_left_ > 0 ? 12 : 11)) {
      case 0: return node(d, vars) + node(d, vars);
      case 1: return node(d, vars) - node(d, vars);
      case 2: return node(d, vars) * node(d, vars);
      case 3: return node(d, vars) / positive(node(d - 1, vars));
      case 4: return -node(d, vars);
      case 5: return exp(sin(node(d - 1, vars)));
      case 6: return log(positive(node(d - 1, vars)));
      case 7: return sin(node(d, vars));
      case 8: return cos(node(d, vars));
      case 9: return sqrt(positive(node(d - 1, vars)));
      case 10: return pow(sin(node(d - 1, vars)), Rational(static_cast<std::int64_t>(rng_.index(3)) + 2));
      default: {
        --quad_left_;
        auto inner = vars;
        inner.push_back("t");
        const Expr upper = leaf(vars);
        return quad("t", cst(0.0), upper, node(std::min(d, 3), inner));
      }
    }
  }

  Rng rng_;
  std::vector<std::string> vars_;
  int quad_left_ = 1;
};

}  // namespace quadratura::testing
