#pragma once

#include "feame/likelihood.hpp"
#include "feame/panel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace feame {

enum class AmeKind {
  PI_JJ,
  AME1,
  AME1_X_CONST,
  AME_N,
  AME_XT,
  AME_DUR_01,
  AME_DUR_12,
  AME_DUR_02,
  ATE_JJ,
  LOG_ODDS_JJ
};

std::string to_string(AmeKind k);
AmeKind ame_kind_from_string(const std::string& name);

struct AmeEstimate {
  AmeKind kind = AmeKind::AME1;
  double value = 0.0;
  std::optional<double> se;
  int alternative = -1;  ///< PI_JJ / ATE_JJ / LOG_ODDS_JJ
  int horizon = 0;       ///< AME_N
  int period = 0;        ///< AME_XT / ATE_JJ
  /// Set when a probability lies outside [0,1] or an effect outside [-1,1].
  bool out_of_range = false;
  std::size_t dropped_windows = 0;
};

/// Π_jj from 2- and 3-period frequencies and the β_kj matrix. Without
/// `x_key` the per-key values are averaged with key shares.
AmeEstimate avg_transition_jj(const HistoryDistribution& freq2, const HistoryDistribution& freq3,
                              const Eigen::MatrixXd& beta_matrix, int j,
                              const std::optional<std::string>& x_key = std::nullopt);

/// (e^β - 1)(P_010 + P_101).
AmeEstimate ame1_binary(const HistoryDistribution& freq3, double beta,
                        const std::optional<std::string>& x_key = std::nullopt);

/// (e^β - 1)^n [P_{0,(10)^n} + P_{(10)^n,1}].
AmeEstimate ame_n(const HistoryDistribution& freq, double beta, int n,
                  const std::optional<std::string>& x_key = std::nullopt);

/// One window (y_{t-2}, y_{t-1}, y_t) with covariates x_{t-1}, x_t.
struct XtObservation {
  int y[3] = {0, 0, 0};
  Eigen::VectorXd x_prev;
  Eigen::VectorXd x_curr;
  double weight = 1.0;
};

double ame_xt_weight(const int (&y)[3], double beta, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x_prev,
                     const Eigen::VectorXd& x_curr);

AmeEstimate ame_xt(const std::vector<XtObservation>& obs, const Theta& theta);

/// Averages over individuals of the panel using periods t-2, t-1, t (1-based).
AmeEstimate ame_xt(const Panel& panel, const Theta& theta, int t);

enum class DurationShift { D01, D12, D02 };

std::string to_string(DurationShift s);
DurationShift duration_shift_from_string(const std::string& name);

AmeEstimate ame_duration(const HistoryDistribution& freq4, double beta1, double beta2, DurationShift which,
                         const std::optional<std::string>& x_key = std::nullopt);

/// Frequencies of the 4-period windows of a panel that start with d_1
/// consistent with the closed forms (windows with y_1 = 1 and d_1 > 0 are
/// dropped and counted).
struct DurationWindows {
  HistoryDistribution freq4;
  std::size_t dropped = 0;
};
DurationWindows duration_windows(const Panel& panel, int d_max = 2);

/// Π_jj minus the cross-sectional share of j at period t (1-based).
AmeEstimate ate_jj(const AmeEstimate& pi_jj, const Panel& panel, int t);

struct DecompositionRow {
  int alternative = 0;
  double pers = 0.0;
  double atp = 0.0;
  double ate = 0.0;
  double uhet = 0.0;
};

/// Per alternative: Pers = P_{j|j} - P_j, ATP = Π_jj, ATE = Π_jj - P_j,
/// UHet = Pers - ATE; Π_jj from all 3-period windows of the panel.
std::vector<DecompositionRow> persistence_decomposition(const Panel& panel, const Eigen::MatrixXd& beta_matrix);

double log_odds_ratio(double pi_jj, double pi_00);
/// (Π_11 - Π_01) / Π_01
double percentage_change(double pi_11, double pi_01);

}  // namespace feame
