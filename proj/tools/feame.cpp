// feame: command line front end.
//
// Exit codes: 0 success, 1 usage or schema error, 2 identification or
// estimation failure.

#include "feame/ame.hpp"
#include "feame/error.hpp"
#include "feame/inference.hpp"
#include "feame/json_io.hpp"
#include "feame/likelihood.hpp"
#include "feame/mc.hpp"
#include "feame/panel.hpp"
#include "feame/parallel.hpp"
#include "feame/re_mle.hpp"
#include "feame/weights.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace feame;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string out_path;

void emit(const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + out_path + "'");
  f << text;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

Panel read_panel(const std::string& path, int num_alternatives) {
  CsvSchema schema;
  schema.num_alternatives = num_alternatives;
  return load_panel_file(path, schema);
}

/// Windows of length T, or the panel itself when every individual already
/// has length T. With `first_only`, only each individual's first window.
Panel windows(const Panel& panel, std::size_t T, bool first_only, int d_max = 2) {
  if (!first_only) return split_subhistories(panel, T, d_max);
  const auto K = static_cast<std::size_t>(panel.num_covariates());
  std::vector<Individual> keep;
  for (const auto& ind : panel.individuals()) {
    if (ind.length() < T) continue;
    Individual w = ind;
    w.y.resize(T);
    w.x.resize(T * K);
    keep.push_back(std::move(w));
  }
  return Panel(std::move(keep), panel.num_alternatives(), panel.num_covariates());
}

ModelSpec model_spec(const std::string& name, const Panel& panel, int d_max) {
  switch (variant_from_string(name)) {
    case Variant::BC_AR1: return ModelSpec::bc_ar1();
    case Variant::BC_AR1_X: return ModelSpec::bc_ar1_x(panel.num_covariates());
    case Variant::BC_DUR: return ModelSpec::bc_dur(d_max);
    case Variant::MNL_DIAG_HABIT: return ModelSpec::mnl_diag_habit(panel.num_alternatives());
    case Variant::MNL_AR1: return ModelSpec::mnl_ar1(panel.num_alternatives());
  }
  throw SchemaError("unknown model '" + name + "'");
}

/// β_kj matrix from a theta document: explicit "model" when recorded,
/// otherwise inferred from the length of beta.
Eigen::MatrixXd beta_matrix_from(const json& doc, const Theta& th, int J1) {
  ModelSpec spec;
  if (doc.contains("model")) {
    spec = ModelSpec{variant_from_string(doc.at("model").get<std::string>()), J1, 0, 2};
  } else if (th.beta.size() == J1 * J1) {
    spec = ModelSpec::mnl_ar1(J1);
  } else if (J1 == 2 && th.beta.size() == 1) {
    spec = ModelSpec::bc_ar1();
  } else if (th.beta.size() == J1 - 1) {
    spec = ModelSpec::mnl_diag_habit(J1);
  } else {
    throw SchemaError("cannot map " + std::to_string(th.beta.size()) + " beta values to a " + std::to_string(J1) +
                      "x" + std::to_string(J1) + " state-dependence matrix");
  }
  if (spec.variant == Variant::BC_DUR) throw SchemaError("duration estimates have no transition matrix");
  if (spec.variant == Variant::BC_AR1_X) spec = ModelSpec::bc_ar1();
  Theta plain = th;
  plain.gamma.resize(0);
  return plain.beta_matrix(spec);
}

double pi_value(const Panel& panel, const Eigen::MatrixXd& B, int j, bool first_only) {
  const auto f3 = history_frequencies(windows(panel, 3, first_only), 3);
  return avg_transition_jj(f3.marginalize_prefix(2), f3, B, j).value;
}

struct AmeArgs {
  std::string kind;
  std::string theta_path;
  std::string panel_path;
  int alternative = 1;
  int n = 1;
  int t = 3;
  std::string shift = "0->1";
  int d_max = 2;
  bool first_window = false;
  int bootstrap = 0;
  std::uint64_t seed = 1;
};

AmeEstimate compute_ame(const AmeArgs& a, const Panel& panel, const json& doc, const Theta& th) {
  const AmeKind kind = ame_kind_from_string(a.kind);
  const int J1 = panel.num_alternatives();
  auto binary = [&] {
    if (J1 != 2) throw SchemaError(a.kind + " needs a binary panel");
    return th.beta(0);
  };
  switch (kind) {
    case AmeKind::PI_JJ: {
      const auto f3 = history_frequencies(windows(panel, 3, a.first_window), 3);
      return avg_transition_jj(f3.marginalize_prefix(2), f3, beta_matrix_from(doc, th, J1), a.alternative);
    }
    case AmeKind::AME1: return ame1_binary(history_frequencies(windows(panel, 3, a.first_window), 3), binary());
    case AmeKind::AME1_X_CONST: {
      auto e = ame1_binary(history_frequencies(windows(panel, 3, a.first_window), 3, true), binary());
      e.kind = AmeKind::AME1_X_CONST;
      return e;
    }
    case AmeKind::AME_N: {
      const auto T = static_cast<std::size_t>(2 * a.n + 1);
      return ame_n(history_frequencies(windows(panel, T, a.first_window), T), binary(), a.n);
    }
    case AmeKind::AME_XT: return ame_xt(panel, th, a.t);
    case AmeKind::AME_DUR_01:
    case AmeKind::AME_DUR_12:
    case AmeKind::AME_DUR_02: {
      if (th.beta.size() < 2) throw SchemaError("duration AMEs need beta = [beta(1), beta(2)]");
      const DurationShift s = kind == AmeKind::AME_DUR_01   ? DurationShift::D01
                              : kind == AmeKind::AME_DUR_12 ? DurationShift::D12
                                                            : DurationShift::D02;
      const auto w = duration_windows(panel, a.d_max);
      auto e = ame_duration(w.freq4, th.beta(0), th.beta(1), s);
      e.dropped_windows = w.dropped;
      return e;
    }
    case AmeKind::ATE_JJ: {
      const auto f3 = history_frequencies(windows(panel, 3, a.first_window), 3);
      const auto pi = avg_transition_jj(f3.marginalize_prefix(2), f3, beta_matrix_from(doc, th, J1), a.alternative);
      return ate_jj(pi, panel, a.t);
    }
    case AmeKind::LOG_ODDS_JJ: {
      const auto B = beta_matrix_from(doc, th, J1);
      AmeEstimate e;
      e.kind = kind;
      e.alternative = a.alternative;
      e.value = log_odds_ratio(pi_value(panel, B, a.alternative, a.first_window), pi_value(panel, B, 0, a.first_window));
      return e;
    }
  }
  throw SchemaError("unsupported AME kind");
}

int run_ame(const AmeArgs& a) {
  const auto doc = read_json(a.theta_path);
  const Theta th = theta_from_json(doc);
  const Panel panel = read_panel(a.panel_path, 0);
  auto e = compute_ame(a, panel, doc, th);
  json j = to_json(e);
  if (a.bootstrap > 0) {
    // θ is re-estimated in each replicate when the document records how it
    // was estimated; otherwise it is held at the supplied value.
    const bool reestimate = doc.contains("model") && doc.contains("T");
    std::optional<ModelSpec> spec;
    std::size_t T = 0;
    if (reestimate) {
      spec = model_spec(doc.at("model").get<std::string>(), panel, doc.value("d_max", 2));
      T = doc.at("T").get<std::size_t>();
    }
    const auto boot = bootstrap_se(
        panel,
        [&](const Panel& p) {
          Theta t = th;
          if (spec) t = cml_estimate(split_subhistories(p, T, spec->d_max), *spec).theta;
          return compute_ame(a, p, doc, t).value;
        },
        a.bootstrap, a.seed);
    e.se = boot.se;
    j = to_json(e);
    j["se_method"] = reestimate ? "bootstrap, theta re-estimated" : "bootstrap, theta held fixed";
    j["bootstrap_B"] = a.bootstrap;
    j["bootstrap_failures"] = boot.failures;
  }
  emit(dump(j));
  return 0;
}

std::string weights_table(const WeightTable& t) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "T = %d, beta = %.6g%s\n", t.T, t.beta, t.ill_conditioned ? " (ill-conditioned)" : "");
  o << buf;
  o << " y1  yT  n1             m_s             w_s\n";
  for (const auto& [k, m] : t.m) {
    std::snprintf(buf, sizeof buf, "%3d %3d %3d %15.10f %15.10f\n", k.y1, k.yT, k.n1, m, t.w.at(k));
    o << buf;
  }
  return o.str();
}

std::string decomposition_csv(const std::vector<DecompositionRow>& rows) {
  std::ostringstream o;
  o << "alternative,pers,atp,ate,uhet\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.alternative, r.pers, r.atp, r.ate, r.uhet);
    o << buf;
  }
  return o.str();
}

std::string decomposition_table(const std::vector<DecompositionRow>& rows) {
  std::ostringstream o;
  o << "  j      Pers       ATP       ATE      UHet\n";
  char buf[120];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%3d %9.4f %9.4f %9.4f %9.4f\n", r.alternative, r.pers, r.atp, r.ate, r.uhet);
    o << buf;
  }
  return o.str();
}

/// (value, variance) of the slope or AME recorded in an estimate document.
PointEstimate point_from(const json& j, HausmanKind kind, const std::string& path) {
  auto sq = [](double v) { return v * v; };
  if (j.contains("value") && j.contains("variance")) return {j.at("value").get<double>(), j.at("variance").get<double>()};
  if (kind == HausmanKind::BETA) {
    if (j.contains("beta_variance")) return {j.at("beta").get<double>(), j.at("beta_variance").get<double>()};
    if (j.contains("theta") && j.contains("covariance")) {
      return {j.at("theta").at("beta").at(0).get<double>(), j.at("covariance").at(0).at(0).get<double>()};
    }
  } else {
    if (j.contains("ame") && j.contains("ame_se") && !j.at("ame_se").is_null()) {
      return {j.at("ame").get<double>(), sq(j.at("ame_se").get<double>())};
    }
    if (j.contains("kind") && j.contains("se") && !j.at("se").is_null()) {
      return {j.at("value").get<double>(), sq(j.at("se").get<double>())};
    }
  }
  throw SchemaError(path + ": no " + to_string(kind) + " estimate with a variance (run with --bootstrap for AME standard errors)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-effects dynamic logit: estimation, average marginal effects and Monte Carlo tools"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  bool pretty = false;
  app.add_option("--threads", threads, "worker threads (default: FEAME_THREADS or all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_path, "write the output here instead of stdout");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a binary AR(1) panel from a Monte Carlo design");
  std::string sim_dgp = "FinMix+1";
  std::size_t sim_N = 1000, sim_T = 4;
  std::uint64_t sim_seed = 1;
  sim->add_option("--dgp", sim_dgp, "design: NoUH, FinMix, MixNor with +1 or -1")->capture_default_str();
  sim->add_option("--N", sim_N, "individuals")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--T", sim_T, "periods")->capture_default_str()->check(CLI::Range(2, 1000000));
  sim->add_option("--seed", sim_seed, "seed")->capture_default_str();

  // estimate
  auto* est = app.add_subcommand("estimate", "conditional maximum likelihood estimate of theta");
  std::string est_panel, est_model = "bc-ar1";
  std::size_t est_T = 0;
  int est_J = 0, est_dmax = 2;
  est->add_option("--panel", est_panel, "panel CSV")->required();
  est->add_option("--model", est_model, "bc-ar1, bc-ar1-x, bc-dur, mnl-diag-habit")->capture_default_str();
  est->add_option("--T", est_T, "window length (all contiguous windows are used)");
  est->add_option("--alternatives", est_J, "number of alternatives J+1 (default: from the data)");
  est->add_option("--d-max", est_dmax, "maximal duration state (bc-dur)")->capture_default_str();

  // ame
  auto* ame = app.add_subcommand("ame", "plug-in average marginal effects and transition probabilities");
  AmeArgs aa;
  ame->add_option("--kind", aa.kind, "PI_JJ, AME1, AME1_X_CONST, AME_N, AME_XT, AME_DUR_01, AME_DUR_12, AME_DUR_02, ATE_JJ, LOG_ODDS_JJ")
      ->required();
  ame->add_option("--beta-from", aa.theta_path, "theta JSON (output of estimate, or {\"beta\": [...]})")->required();
  ame->add_option("--panel", aa.panel_path, "panel CSV")->required();
  ame->add_option("--alternative", aa.alternative, "j for PI_JJ, ATE_JJ, LOG_ODDS_JJ")->capture_default_str();
  ame->add_option("--n", aa.n, "horizon for AME_N")->capture_default_str();
  ame->add_option("--t", aa.t, "period for AME_XT and ATE_JJ")->capture_default_str();
  ame->add_option("--d-max", aa.d_max, "maximal duration state")->capture_default_str();
  ame->add_flag("--first-window", aa.first_window, "use only each individual's first window");
  ame->add_option("--bootstrap", aa.bootstrap, "bootstrap replicates for a standard error");
  ame->add_option("--seed", aa.seed, "bootstrap seed")->capture_default_str();

  // weights
  auto* wts = app.add_subcommand("weights", "AME weights for the binary AR(1) model");
  int w_T = 4;
  double w_beta = 0.0;
  bool w_closed = false;
  wts->add_option("--T", w_T, "window length")->required();
  wts->add_option("--beta", w_beta, "state dependence")->required();
  wts->add_flag("--closed-form", w_closed, "use the tabulated closed forms (T = 4..7)");
  wts->add_flag("--pretty", pretty, "human-readable table");

  // true-ame
  auto* tru = app.add_subcommand("true-ame", "population AME for a heterogeneity distribution");
  std::string t_het, t_dgp, t_kind = "AME1";
  double t_beta = NAN;
  int t_n = 1, t_nodes = 64;
  tru->add_option("--het", t_het, "heterogeneity JSON");
  tru->add_option("--dgp", t_dgp, "named design (alternative to --het/--beta)");
  tru->add_option("--beta", t_beta, "state dependence");
  tru->add_option("--kind", t_kind, "AME1, AME_N, PI_11, PI_01")->capture_default_str();
  tru->add_option("--n", t_n, "horizon for AME_N")->capture_default_str();
  tru->add_option("--nodes", t_nodes, "Gauss-Hermite nodes per normal component")->capture_default_str();

  // re-mle
  auto* rem = app.add_subcommand("re-mle", "random-effects or no-heterogeneity maximum likelihood");
  std::string r_panel, r_model = "finite_mixture", r_initial = "conditional";
  int r_boot = 0;
  std::uint64_t r_seed = 1;
  rem->add_option("--panel", r_panel, "binary panel CSV")->required();
  rem->add_option("--model", r_model, "finite_mixture or nouh")->capture_default_str();
  rem->add_option("--initial", r_initial, "nouh only: conditional on y_1, or joint with P(y_1=1)=L(alpha)")
      ->check(CLI::IsMember({"conditional", "joint"}))
      ->capture_default_str();
  rem->add_option("--bootstrap", r_boot, "bootstrap replicates for the AME standard error");
  rem->add_option("--seed", r_seed, "seed")->capture_default_str();

  // hausman
  auto* hau = app.add_subcommand("hausman", "Hausman test from two estimate documents");
  std::string h_cons, h_eff, h_kind = "BETA";
  hau->add_option("--consistent", h_cons, "fixed-effects estimate JSON")->required();
  hau->add_option("--efficient", h_eff, "random-effects estimate JSON")->required();
  hau->add_option("--kind", h_kind, "BETA or AME")->capture_default_str();

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo experiment");
  std::string m_config, m_csv, m_cdf;
  mc->add_option("--config", m_config, "experiment JSON {dgp, N, T, R, estimators, tests, seed, bootstrap_B}")
      ->required();
  mc->add_option("--csv", m_csv, "also write the estimator table as CSV here");
  mc->add_option("--cdf", m_cdf, "emit the p-value CDF of this test instead of the full result");

  // decompose
  auto* dec = app.add_subcommand("decompose", "persistence decomposition per alternative");
  std::string d_panel, d_theta, d_csv;
  dec->add_option("--panel", d_panel, "panel CSV")->required();
  dec->add_option("--beta-from", d_theta, "theta JSON")->required();
  dec->add_option("--csv", d_csv, "also write the table as CSV here");
  dec->add_flag("--pretty", pretty, "human-readable table");

  // split
  auto* spl = app.add_subcommand("split", "split a panel into all contiguous windows");
  std::string s_panel;
  std::size_t s_T = 4;
  int s_dmax = 2;
  spl->add_option("--panel", s_panel, "panel CSV")->required();
  spl->add_option("--T", s_T, "window length")->required()->check(CLI::Range(2, 1000000));
  spl->add_option("--d-max", s_dmax, "maximal duration state for the d1 column")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) set_num_threads(threads);

    if (sim->parsed()) {
      const Panel p = simulate_panel(DgpSpec::named(sim_dgp), sim_N, sim_T, sim_seed);
      std::ostringstream o;
      write_panel_csv(o, p);
      emit(o.str());
    } else if (est->parsed()) {
      const Panel raw = read_panel(est_panel, est_J);
      const ModelSpec spec = model_spec(est_model, raw, est_dmax);
      std::size_t T = est_T;
      if (T == 0) {
        T = raw.common_length();
        if (T == 0) throw UsageError("unbalanced panel: pass --T to choose a window length");
      }
      const auto e = cml_estimate(split_subhistories(raw, T, spec.d_max), spec);
      json j = to_json(e, spec);
      j["T"] = T;
      emit(dump(j));
    } else if (ame->parsed()) {
      return run_ame(aa);
    } else if (wts->parsed()) {
      const auto t = w_closed ? closed_form_weights(w_T, w_beta) : solve_weights(w_T, w_beta);
      emit(pretty ? weights_table(t) : dump(to_json(t)));
    } else if (tru->parsed()) {
      HeterogeneityDist het;
      double beta = t_beta;
      if (!t_dgp.empty()) {
        const auto d = DgpSpec::named(t_dgp);
        het = d.het;
        if (std::isnan(beta)) beta = d.beta;
      } else if (!t_het.empty()) {
        het = heterogeneity_from_json(read_json(t_het));
      } else {
        throw UsageError("true-ame needs --dgp or --het");
      }
      if (std::isnan(beta)) throw UsageError("true-ame needs --beta");
      const double v = true_ame(beta, het, true_kind_from_string(t_kind), t_n, t_nodes);
      json j;
      j["kind"] = t_kind;
      j["beta"] = beta;
      if (t_kind == "AME_N") j["n"] = t_n;
      j["het"] = to_json(het);
      j["nodes"] = t_nodes;
      j["value"] = v;
      emit(dump(j));
    } else if (rem->parsed()) {
      const Panel p = read_panel(r_panel, 2);
      if (r_model != "finite_mixture" && r_model != "nouh") throw UsageError("--model must be finite_mixture or nouh");
      auto fit = [&](const Panel& q, const ReEstimate* full) {
        if (r_model == "nouh") return mle_nouh(q, initial_condition_from_string(r_initial));
        MixtureOptions mo;
        mo.seed = r_seed;
        if (full) {
          mo.warm_start = full->params;
          mo.warm_start_only = true;
        }
        return mle_finite_mixture(q, mo);
      };
      const ReEstimate e = fit(p, nullptr);
      json j = to_json(e);
      if (r_boot > 0) {
        const auto boot = bootstrap_se_multi(
            p,
            [&](const Panel& q) {
              const auto b = fit(q, &e);
              return std::vector<double>{b.beta, b.ame};
            },
            2, r_boot, r_seed);
        j["beta_se_bootstrap"] = boot[0].se;
        j["ame_se"] = boot[1].se;
        j["bootstrap_B"] = r_boot;
      }
      emit(dump(j));
      if (e.degenerate) std::cerr << "warning: " << e.warning << "\n";
    } else if (hau->parsed()) {
      HausmanKind kind;
      if (h_kind == "BETA") {
        kind = HausmanKind::BETA;
      } else if (h_kind == "AME") {
        kind = HausmanKind::AME;
      } else {
        throw UsageError("--kind must be BETA or AME");
      }
      const auto r = hausman(point_from(read_json(h_cons), kind, h_cons), point_from(read_json(h_eff), kind, h_eff), kind);
      emit(dump(to_json(r)));
      if (!r.valid) std::cerr << "warning: variance difference is not positive; the statistic is undefined\n";
    } else if (mc->parsed()) {
      const auto cfg = experiment_config_from_json(read_json(m_config));
      const auto res = run_experiment(cfg);
      if (!m_csv.empty()) {
        std::ofstream f(m_csv);
        if (!f) throw UsageError("cannot write '" + m_csv + "'");
        write_estimator_csv(f, {res});
      }
      if (!m_cdf.empty()) {
        json a = json::array();
        for (const auto& [p, F] : pvalue_cdf(res, m_cdf)) a.push_back(json::array({p, F}));
        emit(dump(json{{"test", m_cdf}, {"cdf", a}}));
      } else {
        emit(dump(to_json(res)));
      }
    } else if (dec->parsed()) {
      const Panel p = read_panel(d_panel, 0);
      const auto doc = read_json(d_theta);
      const auto rows = persistence_decomposition(p, beta_matrix_from(doc, theta_from_json(doc), p.num_alternatives()));
      if (!d_csv.empty()) {
        std::ofstream f(d_csv);
        if (!f) throw UsageError("cannot write '" + d_csv + "'");
        f << decomposition_csv(rows);
      }
      emit(pretty ? decomposition_table(rows) : dump(to_json(rows)));
    } else if (spl->parsed()) {
      std::ostringstream o;
      write_panel_csv(o, split_subhistories(read_panel(s_panel, 0), s_T, s_dmax));
      emit(o.str());
    }
  } catch (const IdentificationError& e) {
    std::cerr << "identification failure: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "estimation failure: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "estimation failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
