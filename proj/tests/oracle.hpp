#pragma once

// Exact history probabilities by brute-force enumeration over a finite
// support of α. Written against plain logistic formulas so the library's
// likelihood code is not involved.

#include "feame/panel.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double L(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct Support {
  std::vector<double> alpha;
  std::vector<double> prob;
};

inline std::vector<std::vector<int>> all_histories(int J1, int T) {
  std::vector<std::vector<int>> out;
  std::vector<int> y(T, 0);
  while (true) {
    out.push_back(y);
    int t = T - 1;
    while (t >= 0 && ++y[t] == J1) y[t--] = 0;
    if (t < 0) break;
  }
  return out;
}

/// Binary AR1: P(y_1 = 1 | α) = init(α), P(y_t = 1 | y_{t-1}, α) = Λ(α + β y_{t-1}).
inline double ar1_prob(const std::vector<int>& y, double a, double beta, const std::function<double(double)>& init) {
  double p = y[0] ? init(a) : 1.0 - init(a);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double q = L(a + beta * y[t - 1]);
    p *= y[t] ? q : 1.0 - q;
  }
  return p;
}

inline feame::HistoryDistribution exact_ar1(const Support& s, double beta, int T,
                                            const std::function<double(double)>& init) {
  feame::HistoryDistribution d(T, 2);
  for (const auto& y : all_histories(2, T)) {
    double p = 0.0;
    for (std::size_t k = 0; k < s.alpha.size(); ++k) p += s.prob[k] * ar1_prob(y, s.alpha[k], beta, init);
    d.add(y, "", p);
  }
  return d;
}

/// Binary duration model with a fresh start (no run of 1s before period 1):
/// the utility shift after a 1 is β(min(run length, 2)).
inline double dur_prob(const std::vector<int>& y, double a, double b1, double b2,
                       const std::function<double(double)>& init) {
  double p = y[0] ? init(a) : 1.0 - init(a);
  int run = y[0];
  for (std::size_t t = 1; t < y.size(); ++t) {
    double u = a;
    if (y[t - 1] == 1) u += run >= 2 ? b2 : b1;
    const double q = L(u);
    p *= y[t] ? q : 1.0 - q;
    run = y[t] ? run + 1 : 0;
  }
  return p;
}

inline feame::HistoryDistribution exact_dur(const Support& s, double b1, double b2, int T,
                                            const std::function<double(double)>& init) {
  feame::HistoryDistribution d(T, 2);
  for (const auto& y : all_histories(2, T)) {
    double p = 0.0;
    for (std::size_t k = 0; k < s.alpha.size(); ++k) p += s.prob[k] * dur_prob(y, s.alpha[k], b1, b2, init);
    d.add(y, "", p);
  }
  return d;
}

/// Multinomial AR1 with utility α_j + B(y_{t-1}, j).
struct MnlPoint {
  std::vector<double> alpha;   ///< per alternative, alpha[0] = 0
  std::vector<double> init;    ///< P(y_1 = j | α)
  double prob = 1.0;
};

inline double mnl_transition(const MnlPoint& a, const std::vector<std::vector<double>>& B, int k, int j) {
  double s = 0.0;
  for (std::size_t l = 0; l < a.alpha.size(); ++l) s += std::exp(a.alpha[l] + B[k][l]);
  return std::exp(a.alpha[j] + B[k][j]) / s;
}

inline feame::HistoryDistribution exact_mnl(const std::vector<MnlPoint>& pts,
                                            const std::vector<std::vector<double>>& B, int T) {
  const int J1 = static_cast<int>(B.size());
  feame::HistoryDistribution d(T, J1);
  for (const auto& y : all_histories(J1, T)) {
    double p = 0.0;
    for (const auto& a : pts) {
      double q = a.init[y[0]];
      for (int t = 1; t < T; ++t) q *= mnl_transition(a, B, y[t - 1], y[t]);
      p += a.prob * q;
    }
    d.add(y, "", p);
  }
  return d;
}

}  // namespace oracle
