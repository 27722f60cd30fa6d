#include "feame/re_mle.hpp"

#include "feame/error.hpp"
#include "feame/logistic.hpp"
#include "feame/optimize.hpp"
#include "feame/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace feame {

HeterogeneityDist HeterogeneityDist::degenerate(double c) {
  HeterogeneityDist h;
  h.kind = Kind::Degenerate;
  h.points = {c};
  h.probs = {1.0};
  return h;
}

HeterogeneityDist HeterogeneityDist::finite_mixture(std::vector<double> points, std::vector<double> probs) {
  HeterogeneityDist h;
  h.kind = Kind::FiniteMixture;
  h.points = std::move(points);
  h.probs = std::move(probs);
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::normal_mixture(std::vector<double> means, std::vector<double> sds,
                                                    std::vector<double> probs) {
  HeterogeneityDist h;
  h.kind = Kind::NormalMixture;
  h.points = std::move(means);
  h.sds = std::move(sds);
  h.probs = std::move(probs);
  h.validate();
  return h;
}

void HeterogeneityDist::validate() const {
  if (points.empty()) throw SchemaError("heterogeneity distribution needs at least one component");
  if (probs.size() != points.size()) throw SchemaError("one probability per component expected");
  double s = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw SchemaError("component probabilities must be >= 0");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw SchemaError("component probabilities must sum to 1");
  for (double v : points) {
    if (!std::isfinite(v)) throw SchemaError("non-finite support point");
  }
  if (kind == Kind::NormalMixture) {
    if (sds.size() != points.size()) throw SchemaError("one sd per normal component expected");
    for (double sd : sds) {
      if (!(sd > 0.0) || !std::isfinite(sd)) throw SchemaError("normal component sds must be positive");
    }
  }
}

double HeterogeneityDist::sample(Engine& rng) const {
  std::size_t c = 0;
  if (points.size() > 1) {
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    c = pick(rng);
  }
  if (kind == Kind::NormalMixture) {
    std::normal_distribution<double> z(points[c], sds[c]);
    return z(rng);
  }
  return points[c];
}

double HeterogeneityDist::mean() const {
  double m = 0.0;
  for (std::size_t c = 0; c < points.size(); ++c) m += probs[c] * points[c];
  return m;
}

std::string to_string(HeterogeneityDist::Kind k) {
  switch (k) {
    case HeterogeneityDist::Kind::Degenerate: return "degenerate";
    case HeterogeneityDist::Kind::FiniteMixture: return "finite_mixture";
    case HeterogeneityDist::Kind::NormalMixture: return "normal_mixture";
  }
  return "?";
}

double integrate(const HeterogeneityDist& het, const std::function<double(double)>& f, int nodes) {
  het.validate();
  double total = 0.0;
  if (het.kind != HeterogeneityDist::Kind::NormalMixture) {
    for (std::size_t c = 0; c < het.points.size(); ++c) total += het.probs[c] * f(het.points[c]);
    return total;
  }
  const auto& rule = standard_normal_rule(nodes);
  for (std::size_t c = 0; c < het.points.size(); ++c) {
    double part = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      part += rule.weights[i] * f(het.points[c] + het.sds[c] * rule.nodes[i]);
    }
    total += het.probs[c] * part;
  }
  return total;
}

TrueKind true_kind_from_string(const std::string& name) {
  if (name == "AME1") return TrueKind::AME1;
  if (name == "AME_N") return TrueKind::AME_N;
  if (name == "PI_11") return TrueKind::PI_11;
  if (name == "PI_01") return TrueKind::PI_01;
  throw SchemaError("unknown truth kind '" + name + "' (AME1, AME_N, PI_11, PI_01)");
}

double true_ame(double beta, const HeterogeneityDist& het, TrueKind kind, int n, int nodes) {
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  switch (kind) {
    case TrueKind::AME1:
      return integrate(het, [&](double a) { return logistic(a + beta) - logistic(a); }, nodes);
    case TrueKind::AME_N:
      if (n < 1) throw std::invalid_argument("horizon must be at least 1");
      return integrate(het, [&](double a) { return std::pow(logistic(a + beta) - logistic(a), n); }, nodes);
    case TrueKind::PI_11: return integrate(het, [&](double a) { return logistic(a + beta); }, nodes);
    case TrueKind::PI_01: return integrate(het, [&](double a) { return logistic(a); }, nodes);
  }
  return 0.0;
}

HistoryCounts count_histories(const Panel& panel) {
  if (panel.num_alternatives() != 2) throw SchemaError("random-effects estimators need a binary panel");
  std::map<std::vector<int>, double> m;
  for (const auto& ind : panel.individuals()) m[ind.y] += 1.0;
  HistoryCounts out;
  for (auto& [y, c] : m) {
    out.histories.push_back(y);
    out.counts.push_back(c);
  }
  return out;
}

namespace {

void check_variation(const HistoryCounts& data) {
  bool any0 = false, any1 = false;
  for (const auto& y : data.histories) {
    for (int v : y) (v ? any1 : any0) = true;
  }
  if (!any0 || !any1) throw IdentificationError("separation: every observed choice is identical");
}

/// log f(y | α, β, p) and its partial derivatives in (β, α), with the
/// initial period contributing y1 log p + (1-y1) log(1-p).
struct Component {
  double log_f = 0.0;
  double d_beta = 0.0;
  double d_alpha = 0.0;
};

Component component_loglik(const std::vector<int>& y, double alpha, double beta, double log_p1, double log_p0) {
  Component c;
  c.log_f = y[0] ? log_p1 : log_p0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double u = alpha + beta * y[t - 1];
    c.log_f += y[t] ? log_logistic(u) : log_logistic(-u);
    const double r = y[t] - logistic(u);
    c.d_alpha += r;
    c.d_beta += r * y[t - 1];
  }
  return c;
}

}  // namespace

InitialCondition initial_condition_from_string(const std::string& name) {
  if (name == "conditional") return InitialCondition::Conditional;
  if (name == "joint") return InitialCondition::Joint;
  throw SchemaError("unknown initial condition '" + name + "' (conditional, joint)");
}

std::string to_string(InitialCondition ic) { return ic == InitialCondition::Joint ? "joint" : "conditional"; }

double nouh_log_likelihood(const HistoryCounts& data, const Eigen::VectorXd& p, Eigen::VectorXd* gradient,
                           InitialCondition ic) {
  const double alpha = p(0), beta = p(1);
  const bool joint = ic == InitialCondition::Joint;
  const double li1 = joint ? log_logistic(alpha) : 0.0;
  const double li0 = joint ? log_logistic(-alpha) : 0.0;
  double ll = 0.0;
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (std::size_t h = 0; h < data.histories.size(); ++h) {
    const auto& y = data.histories[h];
    const auto c = component_loglik(y, alpha, beta, li1, li0);
    ll += data.counts[h] * c.log_f;
    g(0) += data.counts[h] * (c.d_alpha + (joint ? y[0] - logistic(alpha) : 0.0));
    g(1) += data.counts[h] * c.d_beta;
  }
  if (gradient) *gradient = g;
  return ll;
}

namespace {

// |alpha| or |logit| beyond this is a boundary estimate (probabilities within 1e-5 of 0 or 1).
constexpr double kBoundary = 12.0;

Eigen::Matrix2d nouh_hessian(const HistoryCounts& data, const Eigen::VectorXd& p, InitialCondition ic) {
  const double alpha = p(0), beta = p(1);
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  for (std::size_t h = 0; h < data.histories.size(); ++h) {
    const auto& y = data.histories[h];
    const double n = data.counts[h];
    if (ic == InitialCondition::Joint) {
      const double l0 = logistic(alpha);
      H(0, 0) -= n * l0 * (1 - l0);
    }
    for (std::size_t t = 1; t < y.size(); ++t) {
      const double l = logistic(alpha + beta * y[t - 1]);
      const double v = n * l * (1 - l);
      H(0, 0) -= v;
      H(0, 1) -= v * y[t - 1];
      H(1, 1) -= v * y[t - 1];
    }
  }
  H(1, 0) = H(0, 1);
  return H;
}

}  // namespace

ReEstimate mle_nouh(const Panel& panel, InitialCondition ic) {
  const auto data = count_histories(panel);
  check_variation(data);
  if (ic == InitialCondition::Conditional) {
    bool lag[2] = {false, false}, cur[2] = {false, false};
    for (const auto& y : data.histories) {
      for (std::size_t t = 1; t < y.size(); ++t) {
        lag[y[t - 1]] = true;
        cur[y[t]] = true;
      }
    }
    if (!lag[0] || !lag[1] || !cur[0] || !cur[1]) {
      throw IdentificationError("separation: choices after the first period, or their lags, never vary");
    }
  }
  auto f = [&](const Eigen::VectorXd& p) {
    Evaluation e;
    Eigen::VectorXd g;
    e.value = nouh_log_likelihood(data, p, &g, ic);
    e.gradient = g;
    e.hessian = nouh_hessian(data, p, ic);
    return e;
  };
  NewtonOptions opt;
  opt.gradient_tolerance = 1e-8;
  const auto r = newton_maximize(f, Eigen::VectorXd::Zero(2), opt);
  ReEstimate est;
  est.model = "nouh";
  est.params = r.x;
  est.beta = r.x(1);
  est.het = HeterogeneityDist::degenerate(r.x(0));
  if (ic == InitialCondition::Joint) est.initial_probs = {logistic(r.x(0))};
  est.initial_condition = to_string(ic);
  est.log_likelihood = r.at.value;
  est.covariance = inverse_information(r.at.hessian);
  est.beta_variance = est.covariance(1, 1);
  est.ame = logistic(r.x(0) + r.x(1)) - logistic(r.x(0));
  est.gradient_norm = r.at.gradient.cwiseAbs().maxCoeff();
  est.iterations = r.iterations;
  est.converged = r.converged;
  if (!r.converged) {
    throw ConvergenceError("no-heterogeneity MLE did not converge", r.iterations, est.gradient_norm);
  }
  return est;
}

double mixture_log_likelihood(const HistoryCounts& data, const Eigen::VectorXd& p, Eigen::VectorXd* gradient) {
  const double beta = p(0);
  const double alpha[2] = {p(1), p(2)};
  const double lq = p(3);
  const double log_q[2] = {log_logistic(lq), log_logistic(-lq)};
  const double q1 = logistic(lq);
  const double lp[2] = {p(4), p(5)};
  double ll = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
  for (std::size_t h = 0; h < data.histories.size(); ++h) {
    const auto& y = data.histories[h];
    const double n = data.counts[h];
    Component c[2];
    double lw[2];
    for (int k = 0; k < 2; ++k) {
      c[k] = component_loglik(y, alpha[k], beta, log_logistic(lp[k]), log_logistic(-lp[k]));
      lw[k] = log_q[k] + c[k].log_f;
    }
    const double top = std::max(lw[0], lw[1]);
    const double lse = top + std::log(std::exp(lw[0] - top) + std::exp(lw[1] - top));
    ll += n * lse;
    if (gradient) {
      const double r0 = std::exp(lw[0] - lse);
      const double r1 = 1.0 - r0;
      const double r[2] = {r0, r1};
      g(0) += n * (r0 * c[0].d_beta + r1 * c[1].d_beta);
      g(1) += n * r0 * c[0].d_alpha;
      g(2) += n * r1 * c[1].d_alpha;
      g(3) += n * (r0 - q1);
      for (int k = 0; k < 2; ++k) g(4 + k) += n * r[k] * (y[0] - logistic(lp[k]));
    }
  }
  if (gradient) *gradient = g;
  return ll;
}

namespace {

Eigen::VectorXd canonical(Eigen::VectorXd p) {
  if (p(1) > p(2)) {
    std::swap(p(1), p(2));
    std::swap(p(4), p(5));
    p(3) = -p(3);
  }
  return p;
}

/// EM iterations on the mixture: closed-form updates for q and p_c, one
/// weighted Newton step for (β, α_1, α_2).
Eigen::VectorXd em_steps(const HistoryCounts& data, Eigen::VectorXd p, int iterations) {
  constexpr double kClamp = 12.0;
  for (int it = 0; it < iterations; ++it) {
    const double beta = p(0);
    const double alpha[2] = {p(1), p(2)};
    const double log_q[2] = {log_logistic(p(3)), log_logistic(-p(3))};
    double w_sum[2] = {0, 0}, w_y1[2] = {0, 0};
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (std::size_t h = 0; h < data.histories.size(); ++h) {
      const auto& y = data.histories[h];
      const double n = data.counts[h];
      double lw[2];
      for (int k = 0; k < 2; ++k) {
        lw[k] = log_q[k] + component_loglik(y, alpha[k], beta, log_logistic(p(4 + k)), log_logistic(-p(4 + k))).log_f;
      }
      const double top = std::max(lw[0], lw[1]);
      const double r0 = std::exp(lw[0] - top) / (std::exp(lw[0] - top) + std::exp(lw[1] - top));
      const double r[2] = {r0, 1.0 - r0};
      for (int k = 0; k < 2; ++k) {
        const double w = n * r[k];
        w_sum[k] += w;
        w_y1[k] += w * y[0];
        for (std::size_t t = 1; t < y.size(); ++t) {
          const double l = logistic(alpha[k] + beta * y[t - 1]);
          const double res = y[t] - l;
          const double v = l * (1 - l);
          g(0) += w * res * y[t - 1];
          g(1 + k) += w * res;
          H(0, 0) -= w * v * y[t - 1];
          H(0, 1 + k) -= w * v * y[t - 1];
          H(1 + k, 1 + k) -= w * v;
        }
      }
    }
    H(1, 0) = H(0, 1);
    H(2, 0) = H(0, 2);
    const double total = w_sum[0] + w_sum[1];
    const double q = std::clamp(w_sum[0] / total, 1e-6, 1 - 1e-6);
    p(3) = logit(q);
    for (int k = 0; k < 2; ++k) {
      const double pk = w_sum[k] > 0 ? std::clamp(w_y1[k] / w_sum[k], 1e-6, 1 - 1e-6) : 0.5;
      p(4 + k) = logit(pk);
    }
    Eigen::Matrix3d M = -H + 1e-8 * Eigen::Matrix3d::Identity();
    Eigen::Vector3d step = M.ldlt().solve(g);
    if (!step.allFinite()) break;
    const double len = step.cwiseAbs().maxCoeff();
    if (len > 2.0) step *= 2.0 / len;
    for (int k = 0; k < 3; ++k) p(k) = std::clamp(p(k) + step(k), -kClamp, kClamp);
  }
  return p;
}

ReEstimate finish_mixture(const HistoryCounts& data, const NewtonResult& r) {
  ReEstimate est;
  est.model = "finite_mixture";
  est.params = canonical(r.x);
  const auto& p = est.params;
  est.beta = p(0);
  const double q = logistic(p(3));
  est.het.kind = HeterogeneityDist::Kind::FiniteMixture;
  est.het.points = {p(1), p(2)};
  est.het.probs = {q, 1.0 - q};
  est.initial_probs = {logistic(p(4)), logistic(p(5))};
  est.initial_condition = "joint";
  est.log_likelihood = r.at.value;
  Eigen::VectorXd g;
  mixture_log_likelihood(data, p, &g);
  est.gradient_norm = g.cwiseAbs().maxCoeff();
  est.iterations = r.iterations;
  est.converged = r.converged;
  auto grad = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd gg;
    mixture_log_likelihood(data, x, &gg);
    return gg;
  };
  est.covariance = inverse_information(fd_hessian(grad, p));
  est.beta_variance = est.covariance(0, 0);
  est.ame = q * (logistic(p(1) + p(0)) - logistic(p(1))) + (1 - q) * (logistic(p(2) + p(0)) - logistic(p(2)));
  const bool at_boundary = p.tail(5).cwiseAbs().maxCoeff() > kBoundary;
  if (q < 1e-3 || q > 1 - 1e-3 || std::abs(p(1) - p(2)) < 1e-3 || at_boundary) {
    est.degenerate = true;
    est.warning = "degenerate mixture (q=" + std::to_string(q) + ", alpha=" + std::to_string(p(1)) + "," +
                  std::to_string(p(2)) + "): the two-point random-effects model is not identified in this sample";
  }
  return est;
}

NewtonResult run_newton(const HistoryCounts& data, const Eigen::VectorXd& start) {
  auto f = [&](const Eigen::VectorXd& x) {
    Evaluation e;
    Eigen::VectorXd g;
    e.value = mixture_log_likelihood(data, x, &g);
    e.gradient = g;
    auto grad = [&](const Eigen::VectorXd& z) {
      Eigen::VectorXd gg;
      mixture_log_likelihood(data, z, &gg);
      return gg;
    };
    e.hessian = fd_hessian(grad, x);
    return e;
  };
  NewtonOptions opt;
  opt.max_iterations = 300;
  opt.gradient_tolerance = 1e-7;
  return newton_maximize(f, start, opt);
}

}  // namespace

ReEstimate mle_finite_mixture(const Panel& panel, const MixtureOptions& options) {
  const auto data = count_histories(panel);
  check_variation(data);

  if (options.warm_start && options.warm_start_only) {
    const auto r = run_newton(data, *options.warm_start);
    if (r.converged) return finish_mixture(data, r);
  }

  const auto nouh = mle_nouh(panel);
  const double a0 = nouh.params(0);
  const double b0 = nouh.params(1);
  std::vector<Eigen::VectorXd> starts;
  if (options.warm_start) starts.push_back(*options.warm_start);
  for (int m = 0; m < options.multistarts; ++m) {
    Eigen::VectorXd s(6);
    if (m == 0) {
      s << 0.5 * b0, a0 - 1.0, a0 + 1.0, 0.0, logit(logistic(a0 - 1.0)), logit(logistic(a0 + 1.0));
    } else {
      auto rng = make_engine(options.seed, static_cast<std::uint64_t>(m));
      std::uniform_real_distribution<double> spread(0.5, 3.0), frac(0.0, 1.0), mix(-1.5, 1.5);
      const double lo = a0 - spread(rng), hi = a0 + spread(rng);
      s << b0 * frac(rng), lo, hi, mix(rng), lo, hi;
    }
    starts.push_back(em_steps(data, s, options.em_iterations));
  }

  std::optional<NewtonResult> best;
  for (const auto& s : starts) {
    auto r = run_newton(data, s);
    if (!std::isfinite(r.at.value)) continue;
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.at.value > best->at.value + 1e-9);
    if (better) best = std::move(r);
  }
  if (!best) throw ConvergenceError("finite-mixture MLE failed from every starting point", 0,
                                    std::numeric_limits<double>::infinity());
  return finish_mixture(data, *best);
}

}  // namespace feame
