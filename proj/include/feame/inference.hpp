#pragma once

#include "feame/panel.hpp"
#include "feame/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace feame {

/// Resamples N individuals (whole histories) with replacement. Copies get
/// ids "orig@k" so duplicates stay distinct.
Panel resample_individuals(const Panel& panel, Engine& rng);

struct BootstrapResult {
  double se = 0.0;
  std::vector<double> replicates;  ///< NaN for failed replicates
  std::size_t failures = 0;
  std::vector<std::string> failure_log;
};

/// Replicate r draws its resample from stream (seed, r).
BootstrapResult bootstrap_se(const Panel& panel, const std::function<double(const Panel&)>& statistic, int B,
                             std::uint64_t seed);

/// Several statistics on shared resamples; result[k] is statistic k.
std::vector<BootstrapResult> bootstrap_se_multi(const Panel& panel,
                                                const std::function<std::vector<double>(const Panel&)>& statistics,
                                                int n_statistics, int B, std::uint64_t seed);

/// P(χ²_1 > x).
double chi2_1_upper_tail(double x);

enum class HausmanKind { BETA, AME };
std::string to_string(HausmanKind k);

struct PointEstimate {
  double value = 0.0;
  double variance = 0.0;
};

struct HausmanResult {
  HausmanKind kind = HausmanKind::BETA;
  double statistic = 0.0;  ///< NaN when invalid
  double p_value = 0.0;    ///< NaN when invalid
  double denominator = 0.0;
  bool valid = false;
};

HausmanResult hausman(const PointEstimate& consistent, const PointEstimate& efficient, HausmanKind kind);

}  // namespace feame
