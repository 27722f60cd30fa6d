#pragma once

#include "feame/likelihood.hpp"
#include "feame/panel.hpp"

#include <map>

namespace feame {

using WeightKey = BinaryStatistic;

struct WeightTable {
  int T = 0;
  double beta = 0.0;
  std::map<WeightKey, double> m;
  std::map<WeightKey, double> w;
  /// 2-norm condition numbers of the two linear systems (y_1 = 0, 1).
  double condition[2] = {1.0, 1.0};
  bool ill_conditioned = false;
};

/// Every (y_1, y_T, n_1) a window of length T can carry, ordered.
std::vector<WeightKey> weight_keys(int T);

/// Σ_{y: s(y)=s} exp(β·n_11(y)).
double class_exp_sum(const WeightKey& s, int T, double beta);

/// Numbers of histories with statistic s and n_11 = 0..T-2.
std::vector<double> n11_counts(const WeightKey& s, int T);

WeightTable solve_weights(int T, double beta);

/// Hard-coded weights for T in {4, 5, 6, 7}.
WeightTable closed_form_weights(int T, double beta);

/// Σ_s w_s P_s with P_s aggregated by statistic; key-share weighted over
/// covariate keys unless `x_key` is given.
double ame1_from_weights(const HistoryDistribution& freqs, const WeightTable& table);
double ame1_from_weights(const HistoryDistribution& freqs, const WeightTable& table, const std::string& x_key);

}  // namespace feame
