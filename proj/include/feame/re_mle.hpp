#pragma once

#include "feame/panel.hpp"
#include "feame/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace feame {

struct HeterogeneityDist {
  enum class Kind { Degenerate, FiniteMixture, NormalMixture };

  Kind kind = Kind::Degenerate;
  std::vector<double> points;  ///< support points, or component means
  std::vector<double> sds;     ///< NormalMixture only
  std::vector<double> probs;

  static HeterogeneityDist degenerate(double c);
  static HeterogeneityDist finite_mixture(std::vector<double> points, std::vector<double> probs);
  static HeterogeneityDist normal_mixture(std::vector<double> means, std::vector<double> sds,
                                          std::vector<double> probs);

  void validate() const;
  double sample(Engine& rng) const;
  double mean() const;
};

std::string to_string(HeterogeneityDist::Kind k);

/// E f(α); Gauss-Hermite with `nodes` points per normal component.
double integrate(const HeterogeneityDist& het, const std::function<double(double)>& f, int nodes = 64);

enum class TrueKind { AME1, AME_N, PI_11, PI_01 };

TrueKind true_kind_from_string(const std::string& name);

/// ∫ [Λ(α+β) - Λ(α)]^n f(α) dα (n = 1 for AME1), or ∫ Λ(α+β) / ∫ Λ(α).
double true_ame(double beta, const HeterogeneityDist& het, TrueKind kind = TrueKind::AME1, int n = 1,
                int nodes = 64);

struct ReEstimate {
  std::string model;  ///< "nouh" or "finite_mixture"
  double beta = 0.0;
  HeterogeneityDist het;
  std::vector<double> initial_probs;
  std::string initial_condition;  ///< "conditional" or "joint"
  double log_likelihood = 0.0;
  Eigen::VectorXd params;      ///< internal parameterization
  Eigen::MatrixXd covariance;  ///< of `params`
  double ame = 0.0;
  double beta_variance = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::string warning;
};

/// Distinct binary histories with multiplicities.
struct HistoryCounts {
  std::vector<std::vector<int>> histories;
  std::vector<double> counts;
};
HistoryCounts count_histories(const Panel& panel);

/// Treatment of y_1 in the no-heterogeneity likelihood: condition on it, or
/// model it jointly as P(y_1 = 1) = Λ(α).
enum class InitialCondition { Conditional, Joint };
InitialCondition initial_condition_from_string(const std::string& name);
std::string to_string(InitialCondition ic);

/// α ≡ common intercept; params (α, β).
double nouh_log_likelihood(const HistoryCounts& data, const Eigen::VectorXd& params, Eigen::VectorXd* gradient,
                           InitialCondition ic = InitialCondition::Conditional);
ReEstimate mle_nouh(const Panel& panel, InitialCondition ic = InitialCondition::Conditional);

/// Two-point mixture, params (β, α_1, α_2, logit q, logit p_1, logit p_2)
/// with q = P(component 1) and p_c = P(y_1 = 1 | c).
double mixture_log_likelihood(const HistoryCounts& data, const Eigen::VectorXd& params, Eigen::VectorXd* gradient);

struct MixtureOptions {
  int em_iterations = 20;
  int multistarts = 5;
  std::uint64_t seed = 20240601;
  /// Extra starting point tried first (e.g. a full-sample estimate).
  std::optional<Eigen::VectorXd> warm_start;
  /// Use only the warm start (no EM, no multistarts).
  bool warm_start_only = false;
};

ReEstimate mle_finite_mixture(const Panel& panel, const MixtureOptions& options = {});

}  // namespace feame
