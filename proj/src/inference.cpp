#include "feame/inference.hpp"

#include "feame/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace feame {

Panel resample_individuals(const Panel& panel, Engine& rng) {
  const std::size_t N = panel.size();
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  std::vector<Individual> out;
  out.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    Individual ind = panel[pick(rng)];
    ind.id += "@" + std::to_string(k);
    out.push_back(std::move(ind));
  }
  return Panel(std::move(out), panel.num_alternatives(), panel.num_covariates());
}

namespace {

double sample_sd(const std::vector<double>& v) {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  return n > 1.0 ? std::sqrt(m2 / (n - 1.0)) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<BootstrapResult> bootstrap_se_multi(const Panel& panel,
                                                const std::function<std::vector<double>(const Panel&)>& statistics,
                                                int n_statistics, int B, std::uint64_t seed) {
  if (B < 2) throw std::invalid_argument("bootstrap needs B >= 2");
  if (panel.empty()) throw std::invalid_argument("bootstrap of an empty panel");
  std::vector<std::vector<double>> values(static_cast<std::size_t>(B));
  std::vector<std::string> errors(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t r) {
    auto rng = make_engine(seed, r);
    const Panel sample = resample_individuals(panel, rng);
    try {
      values[r] = statistics(sample);
      if (static_cast<int>(values[r].size()) != n_statistics) {
        throw std::logic_error("statistic returned " + std::to_string(values[r].size()) + " values");
      }
    } catch (const std::exception& e) {
      values[r].assign(static_cast<std::size_t>(n_statistics), std::numeric_limits<double>::quiet_NaN());
      errors[r] = e.what();
    }
  });

  std::vector<BootstrapResult> out(static_cast<std::size_t>(n_statistics));
  for (int k = 0; k < n_statistics; ++k) {
    auto& res = out[k];
    res.replicates.resize(static_cast<std::size_t>(B));
    for (int r = 0; r < B; ++r) {
      const double v = values[r][k];
      res.replicates[r] = std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
      if (!std::isfinite(v)) {
        ++res.failures;
        res.failure_log.push_back("replicate " + std::to_string(r) + ": " +
                                  (errors[r].empty() ? std::string("non-finite statistic") : errors[r]));
      }
    }
    if (static_cast<double>(res.failures) > 0.05 * B) {
      std::string msg = "bootstrap statistic " + std::to_string(k) + " failed on " + std::to_string(res.failures) +
                        " of " + std::to_string(B) + " replicates";
      for (std::size_t i = 0; i < res.failure_log.size() && i < 5; ++i) msg += "\n  " + res.failure_log[i];
      throw std::runtime_error(msg);
    }
    res.se = sample_sd(res.replicates);
  }
  return out;
}

BootstrapResult bootstrap_se(const Panel& panel, const std::function<double(const Panel&)>& statistic, int B,
                             std::uint64_t seed) {
  auto res = bootstrap_se_multi(
      panel, [&](const Panel& p) { return std::vector<double>{statistic(p)}; }, 1, B, seed);
  return std::move(res.front());
}

double chi2_1_upper_tail(double x) {
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

std::string to_string(HausmanKind k) { return k == HausmanKind::BETA ? "BETA" : "AME"; }

HausmanResult hausman(const PointEstimate& consistent, const PointEstimate& efficient, HausmanKind kind) {
  if (consistent.variance < 0.0 || efficient.variance < 0.0) {
    throw std::invalid_argument("Hausman inputs need non-negative variances");
  }
  HausmanResult r;
  r.kind = kind;
  r.denominator = consistent.variance - efficient.variance;
  const double diff = consistent.value - efficient.value;
  if (!(r.denominator > 0.0) || !std::isfinite(diff)) {
    r.valid = false;
    r.statistic = std::numeric_limits<double>::quiet_NaN();
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.valid = true;
  r.statistic = diff * diff / r.denominator;
  r.p_value = chi2_1_upper_tail(r.statistic);
  return r;
}

}  // namespace feame
