#include "feame/likelihood.hpp"

#include "feame/error.hpp"
#include "feame/logistic.hpp"
#include "feame/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace feame {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::BC_AR1: return "bc-ar1";
    case Variant::BC_AR1_X: return "bc-ar1-x";
    case Variant::BC_DUR: return "bc-dur";
    case Variant::MNL_DIAG_HABIT: return "mnl-diag-habit";
    case Variant::MNL_AR1: return "mnl-ar1";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::BC_AR1, Variant::BC_AR1_X, Variant::BC_DUR, Variant::MNL_DIAG_HABIT, Variant::MNL_AR1}) {
    if (to_string(v) == name) return v;
  }
  throw SchemaError("unknown model '" + name + "' (bc-ar1, bc-ar1-x, bc-dur, mnl-diag-habit)");
}

int ModelSpec::beta_size() const {
  switch (variant) {
    case Variant::BC_AR1:
    case Variant::BC_AR1_X: return 1;
    case Variant::BC_DUR: return d_max;
    case Variant::MNL_DIAG_HABIT: return num_alternatives - 1;
    case Variant::MNL_AR1: return num_alternatives * num_alternatives;
  }
  return 0;
}

int ModelSpec::num_params() const {
  return beta_size() + (variant == Variant::BC_AR1_X ? num_covariates : 0);
}

void ModelSpec::validate() const {
  const bool binary = variant == Variant::BC_AR1 || variant == Variant::BC_AR1_X || variant == Variant::BC_DUR;
  if (binary && num_alternatives != 2) {
    throw SchemaError(to_string(variant) + " is a binary model; got " + std::to_string(num_alternatives) +
                      " alternatives");
  }
  if (num_alternatives < 2) throw SchemaError("need at least two alternatives");
  if (variant == Variant::BC_AR1_X && num_covariates < 1) throw SchemaError("bc-ar1-x needs covariates");
  if (variant == Variant::BC_DUR && d_max < 1) throw SchemaError("d_max must be at least 1");
}

Eigen::VectorXd Theta::pack() const {
  Eigen::VectorXd v(beta.size() + gamma.size());
  v << beta, gamma;
  return v;
}

Theta Theta::unpack(const Eigen::VectorXd& v, const ModelSpec& spec) {
  const int nb = spec.beta_size();
  if (v.size() != spec.num_params()) throw std::invalid_argument("parameter vector has the wrong length");
  Theta t;
  t.beta = v.head(nb);
  t.gamma = v.tail(v.size() - nb);
  return t;
}

Theta Theta::zeros(const ModelSpec& spec) { return unpack(Eigen::VectorXd::Zero(spec.num_params()), spec); }

Eigen::MatrixXd Theta::beta_matrix(const ModelSpec& spec) const {
  const int J1 = spec.num_alternatives;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(J1, J1);
  switch (spec.variant) {
    case Variant::BC_AR1:
    case Variant::BC_AR1_X: B(1, 1) = beta(0); break;
    case Variant::BC_DUR: B(1, 1) = beta(0); break;
    case Variant::MNL_DIAG_HABIT:
      for (int j = 1; j < J1; ++j) B(j, j) = beta(j - 1);
      break;
    case Variant::MNL_AR1:
      for (int k = 0; k < J1; ++k)
        for (int j = 0; j < J1; ++j) B(k, j) = beta(k * J1 + j);
      break;
  }
  return B;
}

namespace {

void check_theta(const Theta& theta, const ModelSpec& spec) {
  if (theta.beta.size() != spec.beta_size() ||
      theta.gamma.size() != (spec.variant == Variant::BC_AR1_X ? spec.num_covariates : 0)) {
    throw std::invalid_argument("theta does not match the model specification");
  }
}

bool is_binary(const ModelSpec& spec) {
  return spec.variant == Variant::BC_AR1 || spec.variant == Variant::BC_AR1_X || spec.variant == Variant::BC_DUR;
}

}  // namespace

double utility(int j, int y_prev, int d, std::span<const double> x, std::span<const double> alpha,
               const Theta& theta, const ModelSpec& spec) {
  double u = alpha[j];
  switch (spec.variant) {
    case Variant::BC_AR1:
      if (j == 1 && y_prev == 1) u += theta.beta(0);
      break;
    case Variant::BC_AR1_X:
      if (j == 1) {
        if (y_prev == 1) u += theta.beta(0);
        for (int k = 0; k < spec.num_covariates; ++k) u += x[k] * theta.gamma(k);
      }
      break;
    case Variant::BC_DUR:
      if (j == 1 && y_prev == 1) {
        if (d < 1 || d > spec.d_max) {
          throw std::invalid_argument("duration " + std::to_string(d) + " inconsistent with y_prev = 1");
        }
        u += theta.beta(d - 1);
      }
      break;
    case Variant::MNL_DIAG_HABIT:
      if (j >= 1 && y_prev == j) u += theta.beta(j - 1);
      break;
    case Variant::MNL_AR1: u += theta.beta(y_prev * spec.num_alternatives + j); break;
  }
  return u;
}

double choice_prob(int j, int y_prev, int d, std::span<const double> x, std::span<const double> alpha,
                   const Theta& theta, const ModelSpec& spec) {
  check_theta(theta, spec);
  const int J1 = spec.num_alternatives;
  if (j < 0 || j >= J1 || y_prev < 0 || y_prev >= J1) throw std::out_of_range("alternative index out of range");
  if (static_cast<int>(alpha.size()) != J1) throw std::invalid_argument("alpha needs one entry per alternative");
  if (is_binary(spec)) {
    const double diff = utility(1, y_prev, d, x, alpha, theta, spec) - utility(0, y_prev, d, x, alpha, theta, spec);
    if (!std::isfinite(diff)) throw std::domain_error("non-finite utility");
    return j == 1 ? logistic(diff) : logistic(-diff);
  }
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> u(J1);
  for (int k = 0; k < J1; ++k) {
    u[k] = utility(k, y_prev, d, x, alpha, theta, spec);
    if (!std::isfinite(u[k])) throw std::domain_error("non-finite utility");
    top = std::max(top, u[k]);
  }
  double s = 0.0;
  for (int k = 0; k < J1; ++k) s += std::exp(u[k] - top);
  return std::exp(u[j] - top) / s;
}

double choice_prob(int j, int y_prev, int d, std::span<const double> x, double alpha, const Theta& theta,
                   const ModelSpec& spec) {
  const double a[2] = {0.0, alpha};
  return choice_prob(j, y_prev, d, x, std::span<const double>(a, 2), theta, spec);
}

double history_log_prob(std::span<const int> y, std::span<const double> x, std::span<const double> alpha,
                        const Theta& theta, const ModelSpec& spec, double initial_prob, int d1) {
  if (y.size() < 2) throw std::invalid_argument("history needs at least two periods");
  if (!(initial_prob > 0.0)) throw std::domain_error("initial probability must be positive");
  const auto K = static_cast<std::size_t>(spec.variant == Variant::BC_AR1_X ? spec.num_covariates : 0);
  const auto d = durations(y, d1, spec.d_max);
  double lp = std::log(initial_prob);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const auto xt = K ? x.subspan(t * K, K) : std::span<const double>();
    lp += std::log(choice_prob(y[t], y[t - 1], d[t], xt, alpha, theta, spec));
  }
  return lp;
}

AlphaSignature alpha_signature(std::span<const int> y, std::span<const double> x, const ModelSpec& spec, int d1) {
  AlphaSignature s;
  s.y1 = y.empty() ? 0 : y[0];
  s.d1 = spec.variant == Variant::BC_DUR ? std::min(d1, spec.d_max) : 0;
  s.numerators.assign(spec.num_alternatives - 1, 0);
  const auto K = static_cast<std::size_t>(spec.variant == Variant::BC_AR1_X ? spec.num_covariates : 0);
  const auto d = durations(y, s.d1, spec.d_max);
  for (std::size_t t = 1; t < y.size(); ++t) {
    if (y[t] > 0) ++s.numerators[y[t] - 1];
    DenominatorTag tag;
    tag.y_prev = y[t - 1];
    if (spec.variant == Variant::BC_DUR) tag.d = d[t];
    if (K) tag.x_key = covariate_key(x.subspan(t * K, K));
    s.denominators.push_back(std::move(tag));
  }
  std::sort(s.denominators.begin(), s.denominators.end());
  return s;
}

BinaryStatistic binary_statistic(std::span<const int> y) {
  BinaryStatistic s;
  s.y1 = y.front();
  s.yT = y.back();
  for (std::size_t t = 1; t < y.size(); ++t) s.n1 += y[t];
  return s;
}

Eigen::VectorXd theta_features(std::span<const int> y, std::span<const double> x, const ModelSpec& spec, int d1) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.num_params());
  const int J1 = spec.num_alternatives;
  switch (spec.variant) {
    case Variant::BC_AR1:
      for (std::size_t t = 1; t < y.size(); ++t) c(0) += y[t - 1] == 1 && y[t] == 1;
      break;
    case Variant::BC_AR1_X: {
      const auto K = static_cast<std::size_t>(spec.num_covariates);
      for (std::size_t t = 1; t < y.size(); ++t) {
        c(0) += y[t - 1] == 1 && y[t] == 1;
        if (y[t] == 1) {
          for (std::size_t k = 0; k < K; ++k) c(1 + k) += x[t * K + k];
        }
      }
      break;
    }
    case Variant::BC_DUR: {
      const auto d = durations(y, d1, spec.d_max);
      for (std::size_t t = 1; t < y.size(); ++t) {
        if (y[t - 1] == 1 && y[t] == 1) c(d[t] - 1) += 1.0;
      }
      break;
    }
    case Variant::MNL_DIAG_HABIT:
      for (std::size_t t = 1; t < y.size(); ++t) {
        if (y[t] >= 1 && y[t] == y[t - 1]) c(y[t] - 1) += 1.0;
      }
      break;
    case Variant::MNL_AR1:
      for (std::size_t t = 1; t < y.size(); ++t) c(y[t - 1] * J1 + y[t]) += 1.0;
      break;
  }
  return c;
}

namespace {

constexpr double kEnumerationLimit = 1e7;

void check_enumerable(int J1, std::size_t T) {
  if (std::pow(static_cast<double>(J1), static_cast<double>(T)) > kEnumerationLimit) {
    throw std::length_error("(J+1)^T = " + std::to_string(J1) + "^" + std::to_string(T) +
                            " exceeds the enumeration limit of 1e7 histories");
  }
}

/// Calls f(y) for every history of length T with y[0..fixed) preset.
template <class F>
void for_each_history(std::vector<int> y, std::size_t fixed, int J1, F&& f) {
  const std::size_t T = y.size();
  for (std::size_t t = fixed; t < T; ++t) y[t] = 0;
  while (true) {
    f(static_cast<const std::vector<int>&>(y));
    std::size_t t = T;
    while (t > fixed) {
      --t;
      if (++y[t] < J1) break;
      y[t] = 0;
      if (t == fixed) return;
    }
    if (T == fixed) return;
  }
}

}  // namespace

std::vector<SufficiencyClass> sufficiency_classes(const ModelSpec& spec, std::size_t T, std::span<const double> x,
                                                  int d1) {
  spec.validate();
  check_enumerable(spec.num_alternatives, T);
  std::map<AlphaSignature, std::vector<std::vector<int>>> groups;
  for_each_history(std::vector<int>(T, 0), 0, spec.num_alternatives, [&](const std::vector<int>& y) {
    groups[alpha_signature(y, x, spec, d1)].push_back(y);
  });
  std::vector<SufficiencyClass> out;
  out.reserve(groups.size());
  for (auto& [sig, hs] : groups) out.push_back({sig, std::move(hs)});
  return out;
}

ConditionalProblem::ConditionalProblem(const Panel& panel, const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.variant == Variant::MNL_AR1) {
    throw SchemaError("conditional ML is implemented for bc-ar1, bc-ar1-x, bc-dur and mnl-diag-habit only");
  }
  if (panel.num_alternatives() != spec_.num_alternatives) {
    throw SchemaError("panel has " + std::to_string(panel.num_alternatives()) + " alternatives, model expects " +
                      std::to_string(spec_.num_alternatives));
  }
  if (spec_.variant == Variant::BC_AR1_X && panel.num_covariates() != spec_.num_covariates) {
    throw SchemaError("panel has " + std::to_string(panel.num_covariates()) + " covariates, model expects " +
                      std::to_string(spec_.num_covariates));
  }
  if (panel.empty()) throw IdentificationError("empty panel");
  T_ = panel.common_length();
  if (T_ == 0) throw SchemaError("windows of unequal length; split the panel into sub-histories first");
  check_enumerable(spec_.num_alternatives, T_);

  const auto K = static_cast<std::size_t>(spec_.variant == Variant::BC_AR1_X ? spec_.num_covariates : 0);
  const int d_max = spec_.d_max;

  struct Context {
    int y1;
    int d1;
    std::string x_key;
    auto operator<=>(const Context&) const = default;
  };
  // Per context: signature -> member histories, and observed counts.
  struct Bucket {
    std::map<AlphaSignature, std::vector<std::vector<int>>> classes;
    std::map<AlphaSignature, std::map<std::vector<int>, double>> observed;
    std::vector<double> x;
  };
  std::map<Context, Bucket> buckets;

  for (const auto& ind : panel.individuals()) {
    const int d1 = spec_.variant == Variant::BC_DUR ? std::min(ind.d1, d_max) : 0;
    std::span<const double> x;
    if (K) x = std::span<const double>(ind.x);
    Context ctx{ind.y[0], d1, K ? covariate_key(x) : std::string()};
    auto [it, inserted] = buckets.try_emplace(ctx);
    Bucket& b = it->second;
    if (inserted) {
      b.x.assign(x.begin(), x.end());
      std::vector<int> y0(T_, 0);
      y0[0] = ctx.y1;
      for_each_history(y0, 1, spec_.num_alternatives, [&](const std::vector<int>& y) {
        b.classes[alpha_signature(y, b.x, spec_, d1)].push_back(y);
      });
    }
    b.observed[alpha_signature(ind.y, x, spec_, d1)][ind.y] += 1.0;
  }

  for (auto& [ctx, b] : buckets) {
    for (auto& [sig, obs] : b.observed) {
      const auto& members = b.classes.at(sig);
      if (members.size() < 2) {
        ++n_singleton_;
        continue;
      }
      Class c;
      c.features.resize(static_cast<Eigen::Index>(members.size()), spec_.num_params());
      c.counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(members.size()));
      for (std::size_t m = 0; m < members.size(); ++m) {
        c.features.row(static_cast<Eigen::Index>(m)) = theta_features(members[m], b.x, spec_, ctx.d1).transpose();
        auto f = obs.find(members[m]);
        if (f != obs.end()) c.counts(static_cast<Eigen::Index>(m)) = f->second;
      }
      c.total = c.counts.sum();
      n_informative_ += static_cast<std::size_t>(c.total);
      classes_.push_back(std::move(c));
    }
  }
}

ConditionalLikelihood ConditionalProblem::evaluate(const Eigen::VectorXd& th) const {
  const int p = spec_.num_params();
  ConditionalLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  out.n_classes_informative = static_cast<int>(classes_.size());
  out.n_classes_singleton = n_singleton_;
  out.n_individuals_informative = n_informative_;
  for (const auto& c : classes_) {
    const Eigen::VectorXd v = c.features * th;
    const double top = v.maxCoeff();
    Eigen::VectorXd e = (v.array() - top).exp();
    const double s = e.sum();
    const double lse = top + std::log(s);
    const Eigen::VectorXd prob = e / s;
    const Eigen::VectorXd mean = c.features.transpose() * prob;
    out.value += c.counts.dot(v) - c.total * lse;
    out.gradient += c.features.transpose() * c.counts - c.total * mean;
    const Eigen::MatrixXd centered = c.features.rowwise() - mean.transpose();
    out.hessian -= c.total * (centered.transpose() * prob.asDiagonal() * centered);
  }
  return out;
}

ConditionalLikelihood ConditionalProblem::evaluate(const Theta& theta) const {
  check_theta(theta, spec_);
  return evaluate(theta.pack());
}

ConditionalLikelihood conditional_log_likelihood(const Panel& panel, const Theta& theta, const ModelSpec& spec) {
  return ConditionalProblem(panel, spec).evaluate(theta);
}

ThetaEstimate cml_estimate(const Panel& panel, const ModelSpec& spec, const CmlOptions& options) {
  ConditionalProblem problem(panel, spec);
  if (problem.n_classes_informative() == 0) {
    throw IdentificationError("no informative sufficiency classes: every window is alone in its class (" +
                              std::to_string(problem.n_classes_singleton()) + " singleton classes)");
  }
  auto f = [&](const Eigen::VectorXd& th) {
    auto l = problem.evaluate(th);
    return Evaluation{l.value, std::move(l.gradient), std::move(l.hessian)};
  };
  NewtonOptions no;
  no.max_iterations = options.max_iterations;
  no.gradient_tolerance = options.gradient_tolerance;
  const auto r = newton_maximize(f, Eigen::VectorXd::Zero(spec.num_params()), no);
  const double gnorm = r.at.gradient.size() ? r.at.gradient.cwiseAbs().maxCoeff() : 0.0;
  if (!r.converged) {
    throw ConvergenceError("conditional ML did not converge after " + std::to_string(r.iterations) +
                               " iterations (gradient inf-norm " + std::to_string(gnorm) + ")",
                           r.iterations, gnorm);
  }
  const Eigen::MatrixXd info = -r.at.hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw IdentificationError("conditional information matrix is singular; the informative classes do not "
                              "identify every parameter");
  }
  ThetaEstimate est;
  est.theta = Theta::unpack(r.x, spec);
  est.covariance = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  est.covariance = 0.5 * (est.covariance + est.covariance.transpose());
  est.log_likelihood = r.at.value;
  est.iterations = r.iterations;
  est.gradient_norm = gnorm;
  est.converged = true;
  est.n_classes_informative = problem.n_classes_informative();
  est.n_classes_singleton = problem.n_classes_singleton();
  est.n_individuals_informative = r.at.gradient.size() ? problem.evaluate(r.x).n_individuals_informative : 0;
  return est;
}

}  // namespace feame
