#pragma once

#include "feame/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace feame {

enum class Variant {
  BC_AR1,          ///< u1 = α + β·y_{t-1}
  BC_AR1_X,        ///< u1 = α + β·y_{t-1} + x_t'γ
  BC_DUR,          ///< u1 = α + β(d_t)·y_{t-1}, d_t in {1..d_max}
  MNL_DIAG_HABIT,  ///< u_j = α(j) + β_jj·1{y_{t-1}=j}, β_00 = 0
  MNL_AR1          ///< u_j = α(j) + β_{y_{t-1} j}; full matrix, no CML
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ModelSpec {
  Variant variant = Variant::BC_AR1;
  int num_alternatives = 2;
  int num_covariates = 0;
  int d_max = 2;

  static ModelSpec bc_ar1() { return {}; }
  static ModelSpec bc_ar1_x(int K) { return {Variant::BC_AR1_X, 2, K, 2}; }
  static ModelSpec bc_dur(int d_max = 2) { return {Variant::BC_DUR, 2, 0, d_max}; }
  static ModelSpec mnl_diag_habit(int num_alternatives) {
    return {Variant::MNL_DIAG_HABIT, num_alternatives, 0, 2};
  }
  static ModelSpec mnl_ar1(int num_alternatives) { return {Variant::MNL_AR1, num_alternatives, 0, 2}; }

  /// Length of Theta::beta for this variant.
  int beta_size() const;
  /// Number of free parameters estimated by CML (beta then gamma).
  int num_params() const;
  void validate() const;
};

/// Slope parameters.
///
///  BC_AR1, BC_AR1_X : beta = (β)
///  BC_DUR           : beta = (β(1), ..., β(d_max))
///  MNL_DIAG_HABIT   : beta = (β_11, ..., β_JJ)
///  MNL_AR1          : beta = row-major (J+1)x(J+1) matrix β_kj
struct Theta {
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;

  Eigen::VectorXd pack() const;
  static Theta unpack(const Eigen::VectorXd& v, const ModelSpec& spec);
  static Theta zeros(const ModelSpec& spec);
  /// The (J+1)x(J+1) matrix of β_kj implied by theta (zeros where normalized).
  Eigen::MatrixXd beta_matrix(const ModelSpec& spec) const;
};

/// Utility index of alternative j (alternative 0 of the binary models has
/// utility 0). `alpha` has one entry per alternative; alpha[0] is the
/// level of alternative 0 and is normally 0.
double utility(int j, int y_prev, int d, std::span<const double> x, std::span<const double> alpha,
               const Theta& theta, const ModelSpec& spec);

double choice_prob(int j, int y_prev, int d, std::span<const double> x, std::span<const double> alpha,
                   const Theta& theta, const ModelSpec& spec);

/// Binary convenience: alpha is the scalar fixed effect of alternative 1.
double choice_prob(int j, int y_prev, int d, std::span<const double> x, double alpha, const Theta& theta,
                   const ModelSpec& spec);

/// log initial_prob + Σ_{t>=2} log choice_prob(y_t | y_{t-1}, d_t, x_t).
/// `x` is row-major T x K (empty for K = 0); durations start at d1.
double history_log_prob(std::span<const int> y, std::span<const double> x, std::span<const double> alpha,
                        const Theta& theta, const ModelSpec& spec, double initial_prob, int d1 = 0);

/// Denominator tag of one transition: everything the logit denominator at
/// period t depends on besides α and θ.
struct DenominatorTag {
  int y_prev = 0;
  int d = 0;
  std::string x_key;
  auto operator<=>(const DenominatorTag&) const = default;
};

/// α-dependent part of a history's log-probability (given y_1, d_1).
struct AlphaSignature {
  int y1 = 0;
  int d1 = 0;
  std::vector<int> numerators;  ///< coefficient of α(j), j = 1..J, over t >= 2
  std::vector<DenominatorTag> denominators;  ///< sorted multiset, t = 2..T
  auto operator<=>(const AlphaSignature&) const = default;
};

AlphaSignature alpha_signature(std::span<const int> y, std::span<const double> x, const ModelSpec& spec,
                               int d1 = 0);

/// (y_1, y_T, n_1 = Σ_{t>=2} y_t), the collapsed BC-AR1 statistic.
struct BinaryStatistic {
  int y1 = 0;
  int yT = 0;
  int n1 = 0;
  auto operator<=>(const BinaryStatistic&) const = default;
};
BinaryStatistic binary_statistic(std::span<const int> y);

/// c(y): the θ-coefficients of the history log-probability, ordered as
/// Theta::pack(). log P(y | y_1, α) = c(y)'θ + (α-part fixed by the signature).
Eigen::VectorXd theta_features(std::span<const int> y, std::span<const double> x, const ModelSpec& spec,
                               int d1 = 0);

struct SufficiencyClass {
  AlphaSignature signature;
  std::vector<std::vector<int>> histories;
};

/// Partition of all (J+1)^T histories sharing the covariate history `x`
/// (row-major T x K) and initial duration d1. Guarded at (J+1)^T <= 1e7.
std::vector<SufficiencyClass> sufficiency_classes(const ModelSpec& spec, std::size_t T,
                                                  std::span<const double> x = {}, int d1 = 0);

struct ConditionalLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  int n_classes_informative = 0;
  int n_classes_singleton = 0;
  std::size_t n_individuals_informative = 0;
};

/// Precomputed grouping of a panel into observed sufficiency classes; the
/// enumeration cost is paid once and reused across θ evaluations.
class ConditionalProblem {
 public:
  ConditionalProblem(const Panel& panel, const ModelSpec& spec);

  ConditionalLikelihood evaluate(const Theta& theta) const;
  ConditionalLikelihood evaluate(const Eigen::VectorXd& packed) const;

  const ModelSpec& spec() const { return spec_; }
  std::size_t window_length() const { return T_; }
  int n_classes_informative() const { return static_cast<int>(classes_.size()); }
  int n_classes_singleton() const { return n_singleton_; }

 private:
  struct Class {
    Eigen::MatrixXd features;  ///< members x params
    Eigen::VectorXd counts;    ///< observed windows per member
    double total = 0.0;
  };
  ModelSpec spec_;
  std::size_t T_ = 0;
  std::vector<Class> classes_;
  int n_singleton_ = 0;
  std::size_t n_informative_ = 0;
};

ConditionalLikelihood conditional_log_likelihood(const Panel& panel, const Theta& theta, const ModelSpec& spec);

struct ThetaEstimate {
  Theta theta;
  Eigen::MatrixXd covariance;
  double log_likelihood = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  int n_classes_informative = 0;
  int n_classes_singleton = 0;
  std::size_t n_individuals_informative = 0;
};

struct CmlOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
};

ThetaEstimate cml_estimate(const Panel& panel, const ModelSpec& spec, const CmlOptions& options = {});

}  // namespace feame
