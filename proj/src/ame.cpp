#include "feame/ame.hpp"

#include "feame/error.hpp"

#include <cmath>
#include <stdexcept>

namespace feame {

std::string to_string(AmeKind k) {
  switch (k) {
    case AmeKind::PI_JJ: return "PI_JJ";
    case AmeKind::AME1: return "AME1";
    case AmeKind::AME1_X_CONST: return "AME1_X_CONST";
    case AmeKind::AME_N: return "AME_N";
    case AmeKind::AME_XT: return "AME_XT";
    case AmeKind::AME_DUR_01: return "AME_DUR_01";
    case AmeKind::AME_DUR_12: return "AME_DUR_12";
    case AmeKind::AME_DUR_02: return "AME_DUR_02";
    case AmeKind::ATE_JJ: return "ATE_JJ";
    case AmeKind::LOG_ODDS_JJ: return "LOG_ODDS_JJ";
  }
  return "?";
}

AmeKind ame_kind_from_string(const std::string& name) {
  for (AmeKind k : {AmeKind::PI_JJ, AmeKind::AME1, AmeKind::AME1_X_CONST, AmeKind::AME_N, AmeKind::AME_XT,
                    AmeKind::AME_DUR_01, AmeKind::AME_DUR_12, AmeKind::AME_DUR_02, AmeKind::ATE_JJ,
                    AmeKind::LOG_ODDS_JJ}) {
    if (to_string(k) == name) return k;
  }
  throw SchemaError("unknown AME kind '" + name + "'");
}

std::string to_string(DurationShift s) {
  switch (s) {
    case DurationShift::D01: return "0->1";
    case DurationShift::D12: return "1->2";
    case DurationShift::D02: return "0->2";
  }
  return "?";
}

DurationShift duration_shift_from_string(const std::string& name) {
  if (name == "0->1" || name == "01") return DurationShift::D01;
  if (name == "1->2" || name == "12") return DurationShift::D12;
  if (name == "0->2" || name == "02") return DurationShift::D02;
  throw SchemaError("unknown duration shift '" + name + "' (0->1, 1->2, 0->2)");
}

namespace {

/// Applies a per-key estimator, averaging over keys by share when no key
/// is requested.
template <class F>
double over_keys(const HistoryDistribution& freq, const std::optional<std::string>& x_key, F&& per_key) {
  if (x_key) return per_key(*x_key);
  double total = 0.0;
  for (const auto& k : freq.x_keys()) total += freq.key_share(k) * per_key(k);
  return total;
}

void require_length(const HistoryDistribution& f, std::size_t T, const char* what) {
  if (f.window_length() != T) {
    throw std::invalid_argument(std::string(what) + " needs window length " + std::to_string(T) + ", got " +
                                std::to_string(f.window_length()));
  }
}

void require_binary(const HistoryDistribution& f) {
  if (f.num_alternatives() != 2) throw std::invalid_argument("binary histories expected");
}

}  // namespace

AmeEstimate avg_transition_jj(const HistoryDistribution& freq2, const HistoryDistribution& freq3,
                              const Eigen::MatrixXd& B, int j, const std::optional<std::string>& x_key) {
  require_length(freq2, 2, "avg_transition_jj (freq2)");
  require_length(freq3, 3, "avg_transition_jj (freq3)");
  const int J1 = static_cast<int>(B.rows());
  if (B.cols() != J1 || J1 < freq3.num_alternatives()) throw std::invalid_argument("beta matrix has the wrong shape");
  if (j < 0 || j >= J1) throw std::out_of_range("alternative out of range");
  if (!B.allFinite()) throw std::invalid_argument("beta matrix must be finite");
  auto per_key = [&](const std::string& key) {
    double pi = freq2.prob({j, j}, key);
    for (int k = 0; k < J1; ++k) {
      if (k == j) continue;
      pi += freq3.prob({k, j, j}, key);
      for (int l = 0; l < J1; ++l) {
        if (l == j) continue;
        pi += std::exp(B(k, l) - B(k, j) + B(j, j) - B(j, l)) * freq3.prob({k, j, l}, key);
      }
    }
    return pi;
  };
  AmeEstimate e;
  e.kind = AmeKind::PI_JJ;
  e.alternative = j;
  e.value = over_keys(freq3, x_key, per_key);
  e.out_of_range = e.value < 0.0 || e.value > 1.0;
  return e;
}

AmeEstimate ame1_binary(const HistoryDistribution& freq3, double beta, const std::optional<std::string>& x_key) {
  require_length(freq3, 3, "ame1_binary");
  require_binary(freq3);
  const double e1 = std::expm1(beta);
  AmeEstimate e;
  e.kind = AmeKind::AME1;
  e.value = over_keys(freq3, x_key, [&](const std::string& k) {
    return e1 * (freq3.prob({0, 1, 0}, k) + freq3.prob({1, 0, 1}, k));
  });
  e.out_of_range = std::abs(e.value) > 1.0;
  return e;
}

AmeEstimate ame_n(const HistoryDistribution& freq, double beta, int n, const std::optional<std::string>& x_key) {
  if (n < 1) throw std::invalid_argument("horizon n must be at least 1");
  require_length(freq, static_cast<std::size_t>(2 * n + 1), "ame_n");
  require_binary(freq);
  std::vector<int> head(2 * n + 1), tail(2 * n + 1);
  // 0,(1,0)^n and (1,0)^n,1
  head[0] = 0;
  for (int i = 0; i < n; ++i) {
    head[1 + 2 * i] = 1;
    head[2 + 2 * i] = 0;
    tail[2 * i] = 1;
    tail[2 * i + 1] = 0;
  }
  tail[2 * n] = 1;
  const double factor = std::pow(std::expm1(beta), n);
  AmeEstimate e;
  e.kind = AmeKind::AME_N;
  e.horizon = n;
  e.value = over_keys(freq, x_key, [&](const std::string& k) { return factor * (freq.prob(head, k) + freq.prob(tail, k)); });
  e.out_of_range = std::abs(e.value) > 1.0;
  return e;
}

double ame_xt_weight(const int (&y)[3], double beta, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x_prev,
                     const Eigen::VectorXd& x_curr) {
  const double g2 = gamma.size() ? x_prev.dot(gamma) : 0.0;
  const double g3 = gamma.size() ? x_curr.dot(gamma) : 0.0;
  const int code = y[0] * 4 + y[1] * 2 + y[2];
  switch (code) {
    case 0b001: return (std::exp(g2) - std::exp(g3)) / std::exp(g3);
    case 0b010: return (std::exp(beta + g3) - std::exp(g2)) / std::exp(g2);
    case 0b101: return (std::exp(beta + g2) - std::exp(g3)) / std::exp(g3);
    case 0b110: return (std::exp(g3) - std::exp(g2)) / std::exp(g2);
    default: return 0.0;
  }
}

AmeEstimate ame_xt(const std::vector<XtObservation>& obs, const Theta& theta) {
  if (theta.beta.size() != 1) throw std::invalid_argument("ame_xt needs the bc-ar1-x parameterization");
  double num = 0.0, den = 0.0;
  for (const auto& o : obs) {
    num += o.weight * ame_xt_weight(o.y, theta.beta(0), theta.gamma, o.x_prev, o.x_curr);
    den += o.weight;
  }
  if (den <= 0.0) throw IdentificationError("no observations for AME_XT");
  AmeEstimate e;
  e.kind = AmeKind::AME_XT;
  e.value = num / den;
  e.out_of_range = std::abs(e.value) > 1.0;
  return e;
}

AmeEstimate ame_xt(const Panel& panel, const Theta& theta, int t) {
  if (t < 3) throw std::out_of_range("AME_XT needs t >= 3");
  if (theta.gamma.size() != panel.num_covariates()) {
    throw SchemaError("theta has " + std::to_string(theta.gamma.size()) + " covariate coefficients, panel has " +
                      std::to_string(panel.num_covariates()));
  }
  std::vector<XtObservation> obs;
  const auto K = panel.num_covariates();
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& ind = panel[i];
    if (ind.length() < static_cast<std::size_t>(t)) continue;
    XtObservation o;
    for (int s = 0; s < 3; ++s) o.y[s] = ind.y[t - 3 + s];
    const auto xp = panel.x(i, t - 2);
    const auto xc = panel.x(i, t - 1);
    o.x_prev = Eigen::Map<const Eigen::VectorXd>(xp.data(), K);
    o.x_curr = Eigen::Map<const Eigen::VectorXd>(xc.data(), K);
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw std::out_of_range("no individual observed at period " + std::to_string(t));
  auto e = ame_xt(obs, theta);
  e.period = t;
  return e;
}

AmeEstimate ame_duration(const HistoryDistribution& freq4, double beta1, double beta2, DurationShift which,
                         const std::optional<std::string>& x_key) {
  require_length(freq4, 4, "ame_duration");
  require_binary(freq4);
  const double b1 = std::exp(beta1);
  const double b2 = std::exp(beta2);
  auto per_key = [&](const std::string& k) {
    auto P = [&](int a, int b, int c, int d) { return freq4.prob({a, b, c, d}, k); };
    const double p0010_0100 = P(0, 0, 1, 0) + P(0, 1, 0, 0);
    const double p0011 = P(0, 0, 1, 1);
    const double p0110 = P(0, 1, 1, 0);
    const double p1010_1011 = P(1, 0, 1, 0) + P(1, 0, 1, 1);
    const double p1100 = P(1, 1, 0, 0);
    switch (which) {
      case DurationShift::D01:
        return ((b1 - 1) / 2) * p0010_0100 + ((b1 - 1) / b1) * p0011 + (b1 - 1) * p1010_1011;
      case DurationShift::D12:
        return ((b2 - b1) / 2) * p0010_0100 + ((b2 - b1) / b1) * p0011 + (b2 * (1 - b2) / b1 + b2 - 1) * p0110 +
               (1 - b1 / b2) * p1010_1011 + ((b2 - 1) / b1 - 1 + 1 / b2) * p1100;
      case DurationShift::D02:
        return ((b2 - 1) / 2) * p0010_0100 + ((b2 - 1) / b1) * p0011 + (b2 * (1 - b2) / b1 + b2 - 1) * p0110 +
               (b1 - b1 / b2) * p1010_1011 + ((b2 - 1) / b1 - 1 + 1 / b2) * p1100;
    }
    return 0.0;
  };
  AmeEstimate e;
  e.kind = which == DurationShift::D01 ? AmeKind::AME_DUR_01
           : which == DurationShift::D12 ? AmeKind::AME_DUR_12
                                         : AmeKind::AME_DUR_02;
  e.value = over_keys(freq4, x_key, per_key);
  e.out_of_range = std::abs(e.value) > 1.0;
  return e;
}

DurationWindows duration_windows(const Panel& panel, int d_max) {
  const Panel windows = split_subhistories(panel, 4, d_max);
  DurationWindows out{HistoryDistribution(4, 2), 0};
  for (const auto& w : windows.individuals()) {
    if (w.y[0] == 1 && w.d1 > 0) {
      ++out.dropped;
      continue;
    }
    out.freq4.add(w.y);
  }
  if (out.freq4.count() == 0.0) throw IdentificationError("no 4-period windows with a fresh initial duration");
  return out;
}

AmeEstimate ate_jj(const AmeEstimate& pi_jj, const Panel& panel, int t) {
  if (pi_jj.kind != AmeKind::PI_JJ) throw std::invalid_argument("ate_jj needs a PI_JJ estimate");
  if (t < 1) throw std::out_of_range("period must be >= 1");
  double hits = 0.0, n = 0.0;
  for (const auto& ind : panel.individuals()) {
    if (ind.length() < static_cast<std::size_t>(t)) continue;
    n += 1.0;
    hits += ind.y[t - 1] == pi_jj.alternative;
  }
  if (n == 0.0) throw std::out_of_range("no individual observed at period " + std::to_string(t));
  AmeEstimate e;
  e.kind = AmeKind::ATE_JJ;
  e.alternative = pi_jj.alternative;
  e.period = t;
  e.value = pi_jj.value - hits / n;
  e.out_of_range = std::abs(e.value) > 1.0;
  return e;
}

std::vector<DecompositionRow> persistence_decomposition(const Panel& panel, const Eigen::MatrixXd& beta_matrix) {
  const int J1 = panel.num_alternatives();
  if (beta_matrix.rows() != J1 || beta_matrix.cols() != J1) {
    throw SchemaError("beta matrix is " + std::to_string(beta_matrix.rows()) + "x" +
                      std::to_string(beta_matrix.cols()) + ", panel has " + std::to_string(J1) + " alternatives");
  }
  const Panel windows = split_subhistories(panel, 3);
  if (windows.empty()) throw IdentificationError("no 3-period windows in the panel");
  const auto freq3 = history_frequencies(windows, 3);
  const auto freq2 = freq3.marginalize_prefix(2);
  const auto trans = empirical_transition_matrix(panel);
  std::vector<DecompositionRow> rows;
  for (int j = 0; j < J1; ++j) {
    DecompositionRow r;
    r.alternative = j;
    r.pers = trans.persistence(j);
    r.atp = avg_transition_jj(freq2, freq3, beta_matrix, j).value;
    r.ate = r.atp - trans.shares(j);
    r.uhet = r.pers - r.ate;
    rows.push_back(r);
  }
  return rows;
}

double log_odds_ratio(double pi_jj, double pi_00) {
  if (!(pi_jj > 0.0) || !(pi_00 > 0.0)) throw std::domain_error("log-odds ratio needs positive probabilities");
  return std::log(pi_jj / pi_00);
}

double percentage_change(double pi_11, double pi_01) {
  if (!(pi_01 > 0.0)) throw std::domain_error("percentage change needs a positive baseline");
  return (pi_11 - pi_01) / pi_01;
}

}  // namespace feame
