#pragma once

#include <vector>

namespace feame {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for ∫ f(x) e^{-x^2} dx (Golub-Welsch).
QuadratureRule gauss_hermite(int n);

/// Rule for E f(Z), Z ~ N(0,1): nodes √2·x_i, weights w_i/√π. Cached.
const QuadratureRule& standard_normal_rule(int n);

}  // namespace feame
