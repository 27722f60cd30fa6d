#include "feame/ame.hpp"
#include "feame/error.hpp"
#include "feame/inference.hpp"
#include "feame/json_io.hpp"
#include "feame/likelihood.hpp"
#include "feame/mc.hpp"
#include "feame/parallel.hpp"
#include "feame/re_mle.hpp"
#include "feame/weights.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace feame;

namespace {

using Histories = std::vector<std::vector<int>>;

Panel to_panel(const Histories& ys, int num_alternatives) {
  std::vector<Individual> v;
  v.reserve(ys.size());
  int top = 1;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    Individual ind;
    ind.id = std::to_string(i + 1);
    ind.y = ys[i];
    for (int y : ind.y) top = std::max(top, y);
    v.push_back(std::move(ind));
  }
  return Panel(std::move(v), num_alternatives > 0 ? num_alternatives : top + 1);
}

Histories to_histories(const Panel& p) {
  Histories out;
  for (const auto& ind : p.individuals()) out.push_back(ind.y);
  return out;
}

ModelSpec spec_for(const std::string& model, int J1, int d_max) {
  switch (variant_from_string(model)) {
    case Variant::BC_AR1: return ModelSpec::bc_ar1();
    case Variant::BC_DUR: return ModelSpec::bc_dur(d_max);
    case Variant::MNL_DIAG_HABIT: return ModelSpec::mnl_diag_habit(J1);
    default: throw SchemaError("model '" + model + "' needs covariates; use the command line tool");
  }
}

std::size_t window(const Panel& p, std::optional<std::size_t> T) {
  if (T) return *T;
  const auto c = p.common_length();
  if (c == 0) throw SchemaError("unbalanced histories: pass T");
  return c;
}

HeterogeneityDist het_from(const std::string& text) { return heterogeneity_from_json(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compiled core of feame; see the feame package for the Python API.";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<IdentificationError>(m, "IdentificationError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("set_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  m.def(
      "simulate",
      [](const std::string& dgp, std::size_t N, std::size_t T, std::uint64_t seed) {
        return to_histories(simulate_panel(DgpSpec::named(dgp), N, T, seed));
      },
      py::arg("dgp"), py::arg("N"), py::arg("T"), py::arg("seed"));

  m.def(
      "estimate_json",
      [](const Histories& ys, const std::string& model, std::optional<std::size_t> T, int num_alternatives,
         int d_max) {
        const Panel p = to_panel(ys, num_alternatives);
        const auto spec = spec_for(model, p.num_alternatives(), d_max);
        const std::size_t w = window(p, T);
        json j = to_json(cml_estimate(split_subhistories(p, w, d_max), spec), spec);
        j["T"] = w;
        return dump(j, false);
      },
      py::arg("histories"), py::arg("model") = "bc-ar1", py::arg("T") = py::none(), py::arg("num_alternatives") = 0,
      py::arg("d_max") = 2);

  m.def(
      "weights_json",
      [](int T, double beta, bool closed_form) {
        return dump(to_json(closed_form ? closed_form_weights(T, beta) : solve_weights(T, beta)), false);
      },
      py::arg("T"), py::arg("beta"), py::arg("closed_form") = false);

  m.def(
      "ame1_from_weights",
      [](const Histories& ys, double beta) {
        const Panel p = to_panel(ys, 2);
        const std::size_t T = window(p, std::nullopt);
        return ame1_from_weights(history_frequencies(p, T), solve_weights(static_cast<int>(T), beta));
      },
      py::arg("histories"), py::arg("beta"));

  m.def(
      "ame1",
      [](const Histories& ys, double beta) {
        return ame1_binary(history_frequencies(split_subhistories(to_panel(ys, 2), 3), 3), beta).value;
      },
      py::arg("histories"), py::arg("beta"));

  m.def(
      "ame_n",
      [](const Histories& ys, double beta, int n) {
        const auto T = static_cast<std::size_t>(2 * n + 1);
        return ame_n(history_frequencies(split_subhistories(to_panel(ys, 2), T), T), beta, n).value;
      },
      py::arg("histories"), py::arg("beta"), py::arg("n"));

  m.def(
      "avg_transition",
      [](const Histories& ys, const std::vector<std::vector<double>>& B, int j) {
        const int J1 = static_cast<int>(B.size());
        Eigen::MatrixXd M(J1, J1);
        for (int k = 0; k < J1; ++k) {
          if (static_cast<int>(B[k].size()) != J1) throw SchemaError("beta matrix must be square");
          for (int l = 0; l < J1; ++l) M(k, l) = B[k][l];
        }
        const auto f3 = history_frequencies(split_subhistories(to_panel(ys, J1), 3), 3);
        return avg_transition_jj(f3.marginalize_prefix(2), f3, M, j).value;
      },
      py::arg("histories"), py::arg("beta_matrix"), py::arg("j"));

  m.def(
      "ame_duration",
      [](const Histories& ys, double beta1, double beta2, const std::string& shift) {
        const auto w = duration_windows(to_panel(ys, 2));
        return ame_duration(w.freq4, beta1, beta2, duration_shift_from_string(shift)).value;
      },
      py::arg("histories"), py::arg("beta1"), py::arg("beta2"), py::arg("shift") = "0->1");

  m.def(
      "true_ame",
      [](double beta, const std::string& het_json, const std::string& kind, int n, int nodes) {
        return true_ame(beta, het_from(het_json), true_kind_from_string(kind), n, nodes);
      },
      py::arg("beta"), py::arg("het_json"), py::arg("kind") = "AME1", py::arg("n") = 1, py::arg("nodes") = 64);

  m.def(
      "named_dgp_json", [](const std::string& name) { return dump(to_json(DgpSpec::named(name)), false); },
      py::arg("name"));

  m.def(
      "re_mle_json",
      [](const Histories& ys, const std::string& model, std::uint64_t seed, const std::string& initial) {
        const Panel p = to_panel(ys, 2);
        if (model == "nouh") return dump(to_json(mle_nouh(p, initial_condition_from_string(initial))), false);
        if (model != "finite_mixture") throw SchemaError("model must be 'finite_mixture' or 'nouh'");
        MixtureOptions mo;
        mo.seed = seed;
        return dump(to_json(mle_finite_mixture(p, mo)), false);
      },
      py::arg("histories"), py::arg("model") = "finite_mixture", py::arg("seed") = 20240601,
      py::arg("initial") = "conditional");

  m.def(
      "hausman_json",
      [](double vc, double varc, double ve, double vare, const std::string& kind) {
        if (kind != "BETA" && kind != "AME") throw SchemaError("kind must be 'BETA' or 'AME'");
        return dump(to_json(hausman({vc, varc}, {ve, vare}, kind == "BETA" ? HausmanKind::BETA : HausmanKind::AME)),
                    false);
      },
      py::arg("consistent"), py::arg("consistent_variance"), py::arg("efficient"), py::arg("efficient_variance"),
      py::arg("kind") = "BETA");

  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        ExperimentConfig cfg = experiment_config_from_json(json::parse(config_json));
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg);
        }
        return dump(to_json(res), false);
      },
      py::arg("config_json"));
}
