#include "feame/json_io.hpp"

#include "feame/error.hpp"

#include <algorithm>
#include <cmath>

namespace feame {

std::string dump(const json& j, bool pretty) { return j.dump(pretty ? 2 : -1) + "\n"; }

namespace {

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

Eigen::VectorXd to_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

json key_json(const WeightKey& k) { return json::array({k.y1, k.yT, k.n1}); }

}  // namespace

json to_json(const ThetaEstimate& e, const ModelSpec& spec) {
  json j;
  j["model"] = to_string(spec.variant);
  j["num_alternatives"] = spec.num_alternatives;
  if (spec.variant == Variant::BC_DUR) j["d_max"] = spec.d_max;
  j["theta"] = {{"beta", vec(e.theta.beta)}, {"gamma", vec(e.theta.gamma)}};
  j["covariance"] = mat(e.covariance);
  j["log_likelihood"] = e.log_likelihood;
  j["n_classes_informative"] = e.n_classes_informative;
  j["n_classes_singleton"] = e.n_classes_singleton;
  j["n_individuals_informative"] = e.n_individuals_informative;
  j["converged"] = e.converged;
  j["iterations"] = e.iterations;
  j["gradient_norm"] = e.gradient_norm;
  return j;
}

Theta theta_from_json(const json& j) {
  const json& t = j.contains("theta") ? j.at("theta") : j;
  if (!t.contains("beta")) throw SchemaError("theta JSON needs a 'beta' array");
  Theta th;
  th.beta = t.at("beta").is_array() ? to_vec(t.at("beta")) : Eigen::VectorXd::Constant(1, t.at("beta").get<double>());
  th.gamma = t.contains("gamma") ? to_vec(t.at("gamma")) : Eigen::VectorXd();
  return th;
}

json to_json(const WeightTable& t) {
  json j;
  j["T"] = t.T;
  j["beta"] = t.beta;
  json entries = json::array();
  for (const auto& [k, m] : t.m) {
    entries.push_back({{"s", key_json(k)}, {"m", m}, {"w", t.w.at(k)}});
  }
  j["entries"] = entries;
  j["condition"] = json::array({t.condition[0], t.condition[1]});
  j["ill_conditioned"] = t.ill_conditioned;
  return j;
}

json to_json(const AmeEstimate& e) {
  json j;
  j["kind"] = to_string(e.kind);
  j["value"] = e.value;
  j["se"] = e.se ? json(*e.se) : json(nullptr);
  if (e.alternative >= 0) j["alternative"] = e.alternative;
  if (e.horizon > 0) j["horizon"] = e.horizon;
  if (e.period > 0) j["period"] = e.period;
  j["out_of_range"] = e.out_of_range;
  if (e.dropped_windows) j["dropped_windows"] = e.dropped_windows;
  return j;
}

json to_json(const HeterogeneityDist& h) {
  json j;
  j["kind"] = to_string(h.kind);
  j["points"] = h.points;
  if (h.kind == HeterogeneityDist::Kind::NormalMixture) j["sds"] = h.sds;
  j["probs"] = h.probs;
  return j;
}

HeterogeneityDist heterogeneity_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "degenerate") {
    const double c = j.contains("value") ? j.at("value").get<double>() : j.at("points").at(0).get<double>();
    return HeterogeneityDist::degenerate(c);
  }
  const auto points = j.contains("points") ? j.at("points").get<std::vector<double>>()
                                           : j.at("means").get<std::vector<double>>();
  const auto probs = j.at("probs").get<std::vector<double>>();
  if (kind == "finite_mixture") return HeterogeneityDist::finite_mixture(points, probs);
  if (kind == "normal_mixture") {
    return HeterogeneityDist::normal_mixture(points, j.at("sds").get<std::vector<double>>(), probs);
  }
  throw SchemaError("unknown heterogeneity kind '" + kind + "'");
}

json to_json(const ReEstimate& e) {
  json j;
  j["model"] = e.model;
  j["beta"] = e.beta;
  j["beta_variance"] = e.beta_variance;
  j["ame"] = e.ame;
  j["het"] = to_json(e.het);
  j["initial_condition"] = e.initial_condition;
  if (!e.initial_probs.empty()) j["initial_probs"] = e.initial_probs;
  j["log_likelihood"] = e.log_likelihood;
  j["params"] = vec(e.params);
  j["covariance"] = mat(e.covariance);
  j["converged"] = e.converged;
  j["iterations"] = e.iterations;
  j["gradient_norm"] = e.gradient_norm;
  j["degenerate"] = e.degenerate;
  if (!e.warning.empty()) j["warning"] = e.warning;
  return j;
}

json to_json(const HausmanResult& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["denominator"] = r.denominator;
  j["valid"] = r.valid;
  return j;
}

json to_json(const BootstrapResult& r) {
  json j;
  j["se"] = r.se;
  j["failures"] = r.failures;
  j["replicates"] = r.replicates;
  return j;
}

json to_json(const DgpSpec& d) { return {{"label", d.label}, {"beta", d.beta}, {"het", to_json(d.het)}}; }

json to_json(const ExperimentConfig& c) {
  json j;
  const auto names = DgpSpec::names();
  const bool named = std::find(names.begin(), names.end(), c.dgp.label) != names.end();
  j["dgp"] = named ? json(c.dgp.label) : to_json(c.dgp);
  j["N"] = c.N;
  j["T"] = c.T;
  j["R"] = c.R;
  j["estimators"] = c.estimators;
  json tests = json::array();
  for (const auto& t : c.tests) tests.push_back(t.name());
  j["tests"] = tests;
  j["seed"] = c.seed;
  j["bootstrap_B"] = c.bootstrap_B;
  if (c.force_re) j["force_re"] = true;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  const auto& d = j.at("dgp");
  if (d.is_string()) {
    c.dgp = DgpSpec::named(d.get<std::string>());
  } else {
    c.dgp.label = d.value("label", std::string("custom"));
    c.dgp.beta = d.at("beta").get<double>();
    c.dgp.het = heterogeneity_from_json(d.at("het"));
  }
  c.N = j.value("N", c.N);
  c.T = j.value("T", c.T);
  c.R = j.value("R", c.R);
  if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (j.contains("tests")) {
    for (const auto& t : j.at("tests")) c.tests.push_back(TestSpec::parse(t.get<std::string>()));
  }
  c.seed = j.value("seed", c.seed);
  c.bootstrap_B = j.value("bootstrap_B", c.bootstrap_B);
  c.force_re = j.value("force_re", c.force_re);
  return c;
}

json to_json(const ExperimentResult& r) {
  json j;
  j["config"] = to_json(r.config);
  j["true_beta"] = r.true_beta;
  j["true_ame"] = r.true_ame;
  json est = json::object();
  for (const auto& [name, s] : r.estimators) {
    est[name] = {{"n", s.beta.size()},         {"failures", s.failures}, {"mean_beta", s.mean_beta},
                 {"sd_beta", s.sd_beta},       {"mean_ame", s.mean_ame}, {"sd_ame", s.sd_ame},
                 {"rmse_ame", s.rmse_ame},     {"sd_defined", s.sd_defined}};
  }
  j["estimators"] = est;
  json tests = json::object();
  for (const auto& [name, t] : r.tests) {
    tests[name] = {{"rejection_rate_5pct", t.rejection_rate(0.05)},
                   {"valid", t.p_values.size()},
                   {"invalid", t.invalid},
                   {"p_values", t.p_values}};
  }
  j["tests"] = tests;
  j["failures"] = r.failure_log;
  return j;
}

json to_json(const std::vector<DecompositionRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"alternative", r.alternative}, {"pers", r.pers}, {"atp", r.atp}, {"ate", r.ate}, {"uhet", r.uhet}});
  }
  return a;
}

}  // namespace feame
