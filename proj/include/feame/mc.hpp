#pragma once

#include "feame/inference.hpp"
#include "feame/panel.hpp"
#include "feame/re_mle.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace feame {

struct DgpSpec {
  std::string label = "custom";
  double beta = 0.0;
  HeterogeneityDist het;

  /// The six named designs: NoUH±1, FinMix±1, MixNor±1 ("FinMix(-1)" is
  /// accepted too).
  static DgpSpec named(const std::string& label);
  static std::vector<std::string> names();
  /// Throws SchemaError when a named label's parameters were edited.
  void validate() const;
  /// True for designs without heterogeneity (mixture RE not identified).
  bool is_degenerate() const { return het.kind == HeterogeneityDist::Kind::Degenerate; }
};

/// y_1 ~ Bernoulli(Λ(α)), y_t ~ Bernoulli(Λ(α + β y_{t-1})). Individual i
/// uses RNG stream (seed, i).
Panel simulate_panel(const DgpSpec& dgp, std::size_t N, std::size_t T, std::uint64_t seed);

struct TestSpec {
  HausmanKind kind = HausmanKind::BETA;
  std::string null_model = "finite_mixture";  ///< or "nouh"

  std::string name() const;
  static TestSpec parse(const std::string& name);
};

struct ExperimentConfig {
  DgpSpec dgp;
  std::size_t N = 1000;
  std::size_t T = 4;
  int R = 200;
  std::vector<std::string> estimators{"fe", "re", "nouh"};
  std::vector<TestSpec> tests;
  std::uint64_t seed = 1;
  int bootstrap_B = 99;
  /// Run the mixture RE estimator even on degenerate designs.
  bool force_re = false;
};

struct EstimatorSummary {
  std::vector<double> beta;  ///< successful replications, in replication order
  std::vector<double> ame;
  std::size_t failures = 0;
  double mean_beta = 0.0;
  double sd_beta = 0.0;
  double mean_ame = 0.0;
  double sd_ame = 0.0;
  double rmse_ame = 0.0;
  bool sd_defined = false;
};

struct TestSummary {
  std::vector<double> p_values;  ///< valid replications, sorted
  std::size_t invalid = 0;
  double rejection_rate(double level = 0.05) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  double true_beta = 0.0;
  double true_ame = 0.0;
  std::map<std::string, EstimatorSummary> estimators;
  std::map<std::string, TestSummary> tests;
  std::vector<std::string> failure_log;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// (p, F(p)) step points of the empirical CDF of a test's p-values.
std::vector<std::pair<double, double>> pvalue_cdf(const ExperimentResult& result, const std::string& test);

/// Rows in the column order True β, Mean β̂, Std β̂, True AME, Mean ÂME,
/// Std ÂME, RMSE ÂME.
void write_estimator_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

}  // namespace feame
