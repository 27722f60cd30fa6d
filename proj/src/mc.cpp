#include "feame/mc.hpp"

#include "feame/error.hpp"
#include "feame/likelihood.hpp"
#include "feame/logistic.hpp"
#include "feame/parallel.hpp"
#include "feame/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace feame {

namespace {

std::string normalize_label(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '(' || c == ')' || c == ' '; }), s.end());
  return s;
}

}  // namespace

std::vector<std::string> DgpSpec::names() {
  return {"NoUH-1", "FinMix-1", "MixNor-1", "NoUH+1", "FinMix+1", "MixNor+1"};
}

DgpSpec DgpSpec::named(const std::string& label) {
  const std::string l = normalize_label(label);
  DgpSpec d;
  d.label = l;
  if (l.size() < 2) throw SchemaError("unknown DGP '" + label + "'");
  const std::string sign = l.substr(l.size() - 2);
  if (sign == "-1") {
    d.beta = -1.0;
  } else if (sign == "+1") {
    d.beta = 1.0;
  } else {
    throw SchemaError("unknown DGP '" + label + "'");
  }
  const std::string family = l.substr(0, l.size() - 2);
  if (family == "NoUH") {
    d.het = HeterogeneityDist::degenerate(0.0);
  } else if (family == "FinMix") {
    d.het = HeterogeneityDist::finite_mixture({-1.0, 0.5}, {0.3, 0.7});
  } else if (family == "MixNor") {
    d.het = HeterogeneityDist::normal_mixture({-1.0, 0.5}, {3.0, 3.0}, {0.3, 0.7});
  } else {
    throw SchemaError("unknown DGP '" + label + "' (known: NoUH, FinMix, MixNor with +1 or -1)");
  }
  return d;
}

void DgpSpec::validate() const {
  het.validate();
  if (!std::isfinite(beta)) throw SchemaError("DGP beta must be finite");
  const auto names = DgpSpec::names();
  if (std::find(names.begin(), names.end(), label) == names.end()) return;
  const DgpSpec ref = named(label);
  if (ref.beta != beta || ref.het.kind != het.kind || ref.het.points != het.points || ref.het.sds != het.sds ||
      ref.het.probs != het.probs) {
    throw SchemaError("DGP '" + label + "' does not match the parameters of the named design");
  }
}

Panel simulate_panel(const DgpSpec& dgp, std::size_t N, std::size_t T, std::uint64_t seed) {
  if (N < 1 || T < 2) throw std::invalid_argument("simulation needs N >= 1 and T >= 2");
  dgp.het.validate();
  std::vector<Individual> people(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto rng = make_engine(seed, i);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double alpha = dgp.het.sample(rng);
    auto& ind = people[i];
    ind.id = std::to_string(i + 1);
    ind.t0 = 1;
    ind.y.resize(T);
    ind.y[0] = U(rng) < logistic(alpha) ? 1 : 0;
    for (std::size_t t = 1; t < T; ++t) {
      ind.y[t] = U(rng) < logistic(alpha + dgp.beta * ind.y[t - 1]) ? 1 : 0;
    }
  }
  return Panel(std::move(people), 2, 0);
}

std::string TestSpec::name() const {
  return std::string(kind == HausmanKind::BETA ? "HS_BETA" : "HS_AME") + ":" + null_model;
}

TestSpec TestSpec::parse(const std::string& name) {
  TestSpec t;
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  if (head == "HS_BETA") {
    t.kind = HausmanKind::BETA;
  } else if (head == "HS_AME") {
    t.kind = HausmanKind::AME;
  } else {
    throw SchemaError("unknown test '" + name + "' (HS_BETA:<null> or HS_AME:<null>)");
  }
  if (colon != std::string::npos) t.null_model = name.substr(colon + 1);
  if (t.null_model != "finite_mixture" && t.null_model != "nouh") {
    throw SchemaError("unknown null model '" + t.null_model + "' (finite_mixture, nouh)");
  }
  return t;
}

double TestSummary::rejection_rate(double level) const {
  if (p_values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto hits = std::count_if(p_values.begin(), p_values.end(), [&](double p) { return p < level; });
  return static_cast<double>(hits) / static_cast<double>(p_values.size());
}

namespace {

struct Fit {
  bool ok = false;
  double beta = 0.0;
  double beta_var = 0.0;
  double ame = 0.0;
  std::string error;
};

struct Replication {
  std::map<std::string, Fit> fits;
  std::map<std::string, HausmanResult> tests;
  std::vector<std::string> log;
};

double fe_ame(const Panel& panel, std::size_t T, double beta) {
  return ame1_from_weights(history_frequencies(panel, T), solve_weights(static_cast<int>(T), beta));
}

Fit fit_fe(const Panel& panel, std::size_t T) {
  Fit f;
  try {
    const auto est = cml_estimate(panel, ModelSpec::bc_ar1());
    f.beta = est.theta.beta(0);
    f.beta_var = est.covariance(0, 0);
    f.ame = fe_ame(panel, T, f.beta);
    f.ok = true;
  } catch (const std::exception& e) {
    f.error = e.what();
  }
  return f;
}

Fit from_re(const ReEstimate& est) {
  Fit f;
  f.beta = est.beta;
  f.beta_var = est.beta_variance;
  f.ame = est.ame;
  f.ok = est.converged && !est.degenerate && std::isfinite(est.beta);
  if (!f.ok) f.error = est.degenerate ? est.warning : "not converged";
  return f;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.R < 1) throw SchemaError("R must be at least 1");
  if (cfg.T < 4) throw SchemaError("the experiment needs T >= 4 (the CML slope is not identified at T = 3)");
  for (const auto& e : cfg.estimators) {
    if (e != "fe" && e != "re" && e != "nouh") throw SchemaError("unknown estimator '" + e + "' (fe, re, nouh)");
  }
  auto wants = [&](const std::string& e) {
    return std::find(cfg.estimators.begin(), cfg.estimators.end(), e) != cfg.estimators.end();
  };
  const bool run_re_estimator = wants("re") && (!cfg.dgp.is_degenerate() || cfg.force_re);
  bool need_re = run_re_estimator, need_nouh = wants("nouh"), need_boot = false;
  for (const auto& t : cfg.tests) {
    (t.null_model == "nouh" ? need_nouh : need_re) = true;
    if (t.kind == HausmanKind::AME) need_boot = true;
  }
  const bool need_fe = wants("fe") || !cfg.tests.empty();

  std::vector<Replication> reps(static_cast<std::size_t>(cfg.R));
  parallel_for(reps.size(), [&](std::size_t r) {
    Replication& rep = reps[r];
    const std::uint64_t rseed = stream_key(cfg.seed, r);
    const Panel panel = simulate_panel(cfg.dgp, cfg.N, cfg.T, rseed);

    if (need_fe) rep.fits["fe"] = fit_fe(panel, cfg.T);
    std::optional<ReEstimate> re_full;
    if (need_re) {
      try {
        MixtureOptions mo;
        mo.seed = rseed;
        re_full = mle_finite_mixture(panel, mo);
        rep.fits["re"] = from_re(*re_full);
      } catch (const std::exception& e) {
        rep.fits["re"].error = e.what();
      }
    }
    if (need_nouh) {
      try {
        rep.fits["nouh"] = from_re(mle_nouh(panel));
      } catch (const std::exception& e) {
        rep.fits["nouh"].error = e.what();
      }
    }
    for (const auto& [name, fit] : rep.fits) {
      if (!fit.ok) rep.log.push_back("replication " + std::to_string(r) + " " + name + ": " + fit.error);
    }

    // Bootstrap variances of the AME estimators on shared resamples.
    std::map<std::string, double> boot_var;
    if (need_boot && rep.fits["fe"].ok) {
      std::vector<std::string> models{"fe"};
      for (const auto& t : cfg.tests) {
        const std::string m = t.null_model == "nouh" ? "nouh" : "re";
        if (t.kind == HausmanKind::AME && rep.fits[m].ok &&
            std::find(models.begin(), models.end(), m) == models.end()) {
          models.push_back(m);
        }
      }
      std::optional<Eigen::VectorXd> warm;
      if (re_full) warm = re_full->params;
      auto stats = [&](const Panel& p) {
        std::vector<double> out;
        for (const auto& m : models) {
          if (m == "fe") {
            const auto est = cml_estimate(p, ModelSpec::bc_ar1());
            out.push_back(fe_ame(p, cfg.T, est.theta.beta(0)));
          } else if (m == "nouh") {
            out.push_back(mle_nouh(p).ame);
          } else {
            MixtureOptions mo;
            mo.seed = rseed;
            mo.warm_start = warm;
            mo.warm_start_only = true;
            const auto est = mle_finite_mixture(p, mo);
            out.push_back(est.converged ? est.ame : std::numeric_limits<double>::quiet_NaN());
          }
        }
        return out;
      };
      try {
        const auto boot = bootstrap_se_multi(panel, stats, static_cast<int>(models.size()), cfg.bootstrap_B,
                                             stream_key(rseed, 0xB007));
        for (std::size_t k = 0; k < models.size(); ++k) boot_var[models[k]] = boot[k].se * boot[k].se;
      } catch (const std::exception& e) {
        rep.log.push_back("replication " + std::to_string(r) + " bootstrap: " + e.what());
      }
    }

    for (const auto& t : cfg.tests) {
      const std::string m = t.null_model == "nouh" ? "nouh" : "re";
      const Fit& fe = rep.fits["fe"];
      const Fit& null = rep.fits[m];
      HausmanResult h;
      h.kind = t.kind;
      h.valid = false;
      if (fe.ok && null.ok) {
        if (t.kind == HausmanKind::BETA) {
          h = hausman({fe.beta, fe.beta_var}, {null.beta, null.beta_var}, t.kind);
        } else if (boot_var.count("fe") && boot_var.count(m)) {
          h = hausman({fe.ame, boot_var["fe"]}, {null.ame, boot_var[m]}, t.kind);
        }
      }
      rep.tests[t.name()] = h;
    }
  });

  ExperimentResult res;
  res.config = cfg;
  res.true_beta = cfg.dgp.beta;
  res.true_ame = true_ame(cfg.dgp.beta, cfg.dgp.het);
  std::vector<std::string> estimators;
  if (wants("fe")) estimators.push_back("fe");
  if (run_re_estimator) estimators.push_back("re");
  if (wants("nouh")) estimators.push_back("nouh");
  for (const auto& name : estimators) {
    EstimatorSummary s;
    for (const auto& rep : reps) {
      auto it = rep.fits.find(name);
      if (it != rep.fits.end() && it->second.ok) {
        s.beta.push_back(it->second.beta);
        s.ame.push_back(it->second.ame);
      } else {
        ++s.failures;
      }
    }
    if (static_cast<double>(s.failures) > 0.10 * cfg.R) {
      std::string msg = "estimator '" + name + "' failed in " + std::to_string(s.failures) + " of " +
                        std::to_string(cfg.R) + " replications";
      int shown = 0;
      for (const auto& rep : reps) {
        for (const auto& line : rep.log) {
          if (shown < 5 && line.find(" " + name + ":") != std::string::npos) {
            msg += "\n  " + line;
            ++shown;
          }
        }
      }
      throw std::runtime_error(msg);
    }
    const double n = static_cast<double>(s.beta.size());
    if (n > 0) {
      double sb = 0, sa = 0;
      for (std::size_t k = 0; k < s.beta.size(); ++k) {
        sb += s.beta[k];
        sa += s.ame[k];
      }
      s.mean_beta = sb / n;
      s.mean_ame = sa / n;
      double vb = 0, va = 0, mse = 0;
      for (std::size_t k = 0; k < s.beta.size(); ++k) {
        vb += (s.beta[k] - s.mean_beta) * (s.beta[k] - s.mean_beta);
        va += (s.ame[k] - s.mean_ame) * (s.ame[k] - s.mean_ame);
        mse += (s.ame[k] - res.true_ame) * (s.ame[k] - res.true_ame);
      }
      s.sd_defined = n > 1;
      s.sd_beta = s.sd_defined ? std::sqrt(vb / n) : std::numeric_limits<double>::quiet_NaN();
      s.sd_ame = s.sd_defined ? std::sqrt(va / n) : std::numeric_limits<double>::quiet_NaN();
      s.rmse_ame = std::sqrt(mse / n);
    }
    res.estimators[name] = std::move(s);
  }
  for (const auto& t : cfg.tests) {
    TestSummary ts;
    for (const auto& rep : reps) {
      const auto& h = rep.tests.at(t.name());
      if (h.valid) {
        ts.p_values.push_back(h.p_value);
      } else {
        ++ts.invalid;
      }
    }
    std::sort(ts.p_values.begin(), ts.p_values.end());
    res.tests[t.name()] = std::move(ts);
  }
  for (const auto& rep : reps) res.failure_log.insert(res.failure_log.end(), rep.log.begin(), rep.log.end());
  return res;
}

std::vector<std::pair<double, double>> pvalue_cdf(const ExperimentResult& result, const std::string& test) {
  auto it = result.tests.find(test);
  if (it == result.tests.end()) throw std::invalid_argument("test '" + test + "' was not run");
  const auto& p = it->second.p_values;
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i + 1 < p.size() && p[i + 1] == p[i]) continue;
    out.emplace_back(p[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

void write_estimator_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << "dgp,estimator,true_beta,mean_beta,std_beta,true_ame,mean_ame,std_ame,rmse_ame\n";
  const std::pair<const char*, const char*> rows[] = {{"fe", "FE-CMLE"}, {"re", "RE-MLE"}, {"nouh", "NoUH-MLE"}};
  auto num = [](double v) {
    if (!std::isfinite(v)) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const auto& r : results) {
    for (const auto& [key, label] : rows) {
      auto it = r.estimators.find(key);
      out << r.config.dgp.label << ',' << label << ',' << num(r.true_beta) << ',';
      if (it == r.estimators.end() || it->second.beta.empty()) {
        out << "NA,NA," << num(r.true_ame) << ",NA,NA,NA\n";
        continue;
      }
      const auto& s = it->second;
      out << num(s.mean_beta) << ',' << num(s.sd_beta) << ',' << num(r.true_ame) << ',' << num(s.mean_ame) << ','
          << num(s.sd_ame) << ',' << num(s.rmse_ame) << '\n';
    }
  }
}

}  // namespace feame
