#pragma once

#include <cmath>

namespace feame {

/// Logistic cdf e^u / (1 + e^u), evaluated without overflow for large |u|.
inline double logistic(double u) {
  if (u >= 0.0) {
    return 1.0 / (1.0 + std::exp(-u));
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// log(1 + e^u), stable for |u| > 30.
inline double log1p_exp(double u) {
  if (u > 30.0) return u + std::log1p(std::exp(-u));
  if (u < -30.0) return std::exp(u);
  return std::log1p(std::exp(u));
}

/// log Λ(u)
inline double log_logistic(double u) { return -log1p_exp(-u); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace feame
