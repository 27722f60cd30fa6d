#include "doctest.h"

#include "oracle.hpp"

#include "feame/error.hpp"
#include "feame/likelihood.hpp"
#include "feame/mc.hpp"
#include "feame/optimize.hpp"
#include "feame/rng.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <set>
#include <random>

using namespace feame;

namespace {

Panel make_panel(const std::vector<std::vector<int>>& ys, int J1 = 2) {
  std::vector<Individual> v;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    Individual ind;
    ind.id = std::to_string(i);
    ind.y = ys[i];
    v.push_back(ind);
  }
  return Panel(std::move(v), J1);
}

Theta binary_theta(double beta) {
  Theta t;
  t.beta = Eigen::VectorXd::Constant(1, beta);
  t.gamma = Eigen::VectorXd();
  return t;
}

/// Random θ, and a random x path for the covariate model.
struct Case {
  ModelSpec spec;
  Theta theta;
  std::vector<double> x;
  int d1 = 0;
};

std::vector<Case> random_cases(Engine& rng, int T) {
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  std::uniform_int_distribution<int> xv(0, 2);
  std::vector<Case> cases;
  for (auto spec : {ModelSpec::bc_ar1(), ModelSpec::bc_ar1_x(2), ModelSpec::bc_dur(2), ModelSpec::mnl_diag_habit(3)}) {
    for (int d1 = 0; d1 <= (spec.variant == Variant::BC_DUR ? 2 : 0); ++d1) {
      Case c;
      c.spec = spec;
      Eigen::VectorXd v(spec.num_params());
      for (auto& e : v) e = U(rng);
      c.theta = Theta::unpack(v, spec);
      if (spec.variant == Variant::BC_AR1_X) {
        c.x.resize(T * 2);
        // few distinct values so that classes are not all singletons
        for (auto& e : c.x) e = 0.5 * xv(rng);
      }
      c.d1 = d1;
      cases.push_back(c);
    }
  }
  return cases;
}

std::vector<double> alpha_vector(const ModelSpec& spec, const std::vector<double>& a) {
  std::vector<double> out(spec.num_alternatives, 0.0);
  for (int j = 1; j < spec.num_alternatives; ++j) out[j] = a[(j - 1) % a.size()];
  return out;
}

}  // namespace

TEST_SUITE("likelihood") {

TEST_CASE("choice_prob examples") {
  const auto spec = ModelSpec::bc_ar1();
  CHECK(choice_prob(1, 1, 0, {}, 0.0, binary_theta(1.0), spec) == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))).epsilon(1e-15));
  for (double a : {-2.0, 0.3, 4.0}) {
    CHECK(choice_prob(1, 0, 0, {}, a, binary_theta(0.0), spec) == doctest::Approx(oracle::L(a)));
    CHECK(choice_prob(1, 1, 0, {}, a, binary_theta(0.0), spec) == doctest::Approx(oracle::L(a)));
  }
  const auto mnl = ModelSpec::mnl_diag_habit(4);
  Theta th;
  th.beta = Eigen::Vector3d(0.3, -0.2, 1.1);
  th.gamma = Eigen::VectorXd();
  const std::vector<double> alpha{0.0, 0.4, -1.0, 2.0};
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += choice_prob(j, k, 0, {}, alpha, th, mnl);
    CHECK(std::abs(s - 1.0) < 1e-14);
  }
  CHECK_THROWS(choice_prob(1, 1, 0, {}, std::nan(""), binary_theta(1.0), spec));
}

TEST_CASE("history_log_prob") {
  const auto spec = ModelSpec::bc_ar1();
  const std::vector<double> a0{0.0, 0.0};
  CHECK(history_log_prob(std::vector<int>{0, 1}, {}, a0, binary_theta(0.0), spec, 0.5) ==
        doctest::Approx(std::log(0.25)));
  CHECK_THROWS(history_log_prob(std::vector<int>{0, 1}, {}, a0, binary_theta(0.0), spec, 0.0));

  auto rng = make_engine(1, 0);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const double alpha = U(rng), beta = U(rng), init = 0.3;
    const std::vector<double> av{0.0, alpha};
    for (int y1 = 0; y1 <= 1; ++y1) {
      double total = 0.0;
      for (auto y : oracle::all_histories(2, 5)) {
        if (y[0] != y1) continue;
        const double lp = history_log_prob(y, {}, av, binary_theta(beta), spec, init);
        total += std::exp(lp);
        // P(y_1 = y1) = 0.3 in both branches
        const double direct = oracle::ar1_prob(y, alpha, beta, [&](double) { return y1 ? 0.3 : 0.7; });
        CHECK(std::exp(lp) == doctest::Approx(direct).epsilon(1e-12));
      }
      CHECK(std::abs(total - init) < 1e-12);
    }
  }
}

TEST_CASE("alpha_signature examples") {
  const auto spec = ModelSpec::bc_ar1();
  CHECK(binary_statistic(std::vector<int>{0, 1, 1, 0}) == BinaryStatistic{0, 0, 2});
  CHECK(binary_statistic(std::vector<int>{0, 0, 1, 1}) == BinaryStatistic{0, 1, 2});
  // the generic signature induces the same partition as (y1, yT, n1)
  const auto hs = oracle::all_histories(2, 5);
  for (const auto& a : hs) {
    for (const auto& b : hs) {
      const bool same_sig = alpha_signature(a, {}, spec) == alpha_signature(b, {}, spec);
      CHECK(same_sig == (binary_statistic(a) == binary_statistic(b)));
    }
  }
  const auto dur = ModelSpec::bc_dur(2);
  const auto s1 = alpha_signature(std::vector<int>{1, 1, 0, 1}, {}, dur, 0);
  const auto s2 = alpha_signature(std::vector<int>{1, 0, 1, 1}, {}, dur, 0);
  CHECK(s1.numerators == s2.numerators);
  CHECK(s1.denominators != s2.denominators);
  CHECK_FALSE(s1 == s2);
}

TEST_CASE("sufficiency_classes examples") {
  const auto spec = ModelSpec::bc_ar1();
  auto find = [](const std::vector<SufficiencyClass>& cs, const std::vector<int>& member) {
    for (const auto& c : cs)
      for (const auto& h : c.histories)
        if (h == member) return c.histories;
    return std::vector<std::vector<int>>{};
  };
  const auto c3 = sufficiency_classes(spec, 3);
  CHECK(find(c3, {0, 0, 1}).size() == 1);
  CHECK(find(c3, {0, 1, 0}).size() == 1);
  const auto c4 = sufficiency_classes(spec, 4);
  const auto cls = find(c4, {0, 1, 0, 1});
  CHECK(cls.size() == 2);
  CHECK(std::find(cls.begin(), cls.end(), std::vector<int>{0, 0, 1, 1}) != cls.end());

  auto rng = make_engine(2, 0);
  for (int T = 2; T <= 5; ++T) {
    for (const auto& c : random_cases(rng, T)) {
      std::size_t n = 0;
      std::set<std::vector<int>> seen;
      for (const auto& k : sufficiency_classes(c.spec, T, c.x, c.d1)) {
        n += k.histories.size();
        for (const auto& h : k.histories) seen.insert(h);
      }
      const auto total = static_cast<std::size_t>(std::pow(c.spec.num_alternatives, T));
      CHECK(n == total);
      CHECK(seen.size() == total);
    }
  }
  CHECK_THROWS_AS(sufficiency_classes(ModelSpec::mnl_diag_habit(6), 10), std::length_error);
}

TEST_CASE("signature sufficiency: within-class ratios do not depend on alpha") {
  auto rng = make_engine(3, 0);
  std::uniform_real_distribution<double> A(-5, 5);
  const int T = 4;
  for (const auto& c : random_cases(rng, T)) {
    std::vector<std::vector<double>> grid;
    for (int g = 0; g < 20; ++g) grid.push_back(alpha_vector(c.spec, {A(rng), A(rng), A(rng)}));
    for (const auto& k : sufficiency_classes(c.spec, T, c.x, c.d1)) {
      if (k.histories.size() < 2) continue;
      for (std::size_t m = 1; m < k.histories.size(); ++m) {
        double ref = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const double d = history_log_prob(k.histories[m], c.x, grid[g], c.theta, c.spec, 0.5, c.d1) -
                           history_log_prob(k.histories[0], c.x, grid[g], c.theta, c.spec, 0.5, c.d1);
          if (g == 0) {
            ref = d;
            // and the θ-part accounts for the whole difference
            const double cdiff = (theta_features(k.histories[m], c.x, c.spec, c.d1) -
                                  theta_features(k.histories[0], c.x, c.spec, c.d1)).dot(c.theta.pack());
            CHECK(std::abs(d - cdiff) < 1e-10);
          }
          CHECK(std::abs(std::exp(d - ref) - 1.0) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("conditional likelihood examples") {
  const auto spec = ModelSpec::bc_ar1();
  // P((0,0,1,1) | s = (0,1,2)) = e^β / (1 + e^β)
  const auto l = conditional_log_likelihood(make_panel({{0, 0, 1, 1}}), binary_theta(1.0), spec);
  CHECK(std::exp(l.value) == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))).epsilon(1e-14));
  CHECK(l.n_classes_informative == 1);

  // θ = 0: each informative window contributes -log(class size)
  std::vector<std::vector<int>> ys;
  for (const auto& y : oracle::all_histories(2, 5)) ys.push_back(y);
  const auto p = make_panel(ys);
  const auto l0 = conditional_log_likelihood(p, binary_theta(0.0), spec);
  double expected = 0.0;
  for (const auto& k : sufficiency_classes(spec, 5)) {
    expected -= static_cast<double>(k.histories.size()) * std::log(static_cast<double>(k.histories.size()));
  }
  CHECK(l0.value == doctest::Approx(expected).epsilon(1e-13));

  // singleton-only panel contributes nothing
  const auto ls = conditional_log_likelihood(make_panel({{0, 0, 0, 0}, {1, 1, 1, 1}}), binary_theta(0.7), spec);
  CHECK(ls.value == 0.0);
  CHECK(ls.gradient.norm() == 0.0);
  CHECK(ls.n_classes_singleton == 2);
}

TEST_CASE("conditional probabilities within a class sum to one") {
  auto rng = make_engine(4, 0);
  for (const auto& c : random_cases(rng, 4)) {
    for (const auto& k : sufficiency_classes(c.spec, 4, c.x, c.d1)) {
      std::vector<double> v;
      for (const auto& h : k.histories) v.push_back(theta_features(h, c.x, c.spec, c.d1).dot(c.theta.pack()));
      double s = 0.0, z = 0.0;
      for (double e : v) z += std::exp(e);
      for (double e : v) s += std::exp(e) / z;
      CHECK(std::abs(s - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("gradient and Hessian against finite differences; concavity") {
  auto rng = make_engine(5, 0);
  std::uniform_int_distribution<int> pick(0, 1000);
  for (const auto& c : random_cases(rng, 4)) {
    // a panel with every history of the context, random multiplicities
    std::vector<Individual> people;
    for (const auto& y : oracle::all_histories(c.spec.num_alternatives, 4)) {
      const int copies = pick(rng) % 3;
      for (int k = 0; k < copies; ++k) {
        Individual ind;
        ind.id = std::to_string(people.size());
        ind.y = y;
        ind.x = c.x;
        ind.d1 = c.d1;
        people.push_back(ind);
      }
    }
    const Panel panel(std::move(people), c.spec.num_alternatives,
                      c.spec.variant == Variant::BC_AR1_X ? c.spec.num_covariates : 0);
    const ConditionalProblem prob(panel, c.spec);
    const auto th = c.theta.pack();
    const auto at = prob.evaluate(th);
    const auto g = fd_gradient([&](const Eigen::VectorXd& v) { return prob.evaluate(v).value; }, th);
    CHECK((g - at.gradient).cwiseAbs().maxCoeff() < 1e-6);
    const auto H = fd_hessian([&](const Eigen::VectorXd& v) { return prob.evaluate(v).gradient; }, th);
    CHECK((H - at.hessian).cwiseAbs().maxCoeff() < 1e-5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(at.hessian);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("likelihood splits into conditional and sufficient-statistic parts (multinomial)") {
  auto rng = make_engine(6, 0);
  std::uniform_real_distribution<double> U(-2, 2);
  const int J1 = 4;
  const auto spec = ModelSpec::mnl_ar1(J1);
  for (int rep = 0; rep < 20; ++rep) {
    Theta th = Theta::zeros(spec);
    for (auto& e : th.beta) e = U(rng);
    const Eigen::MatrixXd B = th.beta_matrix(spec);
    const std::vector<double> alpha{0.0, U(rng), U(rng), U(rng)};
    auto pi = [&](int k, int j) { return choice_prob(j, k, 0, {}, alpha, th, spec); };
    for (int j = 0; j < J1; ++j)
      for (int k = 0; k < J1; ++k)
        for (int l = 0; l < J1; ++l) {
          if (j == k || j == l) continue;
          const double lhs = std::exp(B(k, l) - B(k, j) + B(j, j) - B(j, l));
          const double rhs = pi(k, l) * pi(j, j) / (pi(k, j) * pi(j, l));
          CHECK(std::abs(lhs / rhs - 1.0) < 1e-12);
        }
  }
}

TEST_CASE("cml_estimate identification failure and unequal windows") {
  CHECK_THROWS_AS(cml_estimate(make_panel({{0, 0, 0, 0}, {1, 1, 1, 1}}), ModelSpec::bc_ar1()), IdentificationError);
  CHECK_THROWS_AS(cml_estimate(make_panel({{0, 1, 0}, {1, 0, 1}}), ModelSpec::bc_ar1()), IdentificationError);
  CHECK_THROWS_AS(cml_estimate(make_panel({{0, 1, 0, 1}, {1, 0, 1}}), ModelSpec::bc_ar1()), SchemaError);
}

TEST_CASE("cml_estimate recovers beta on a large BC-AR1 sample") {
  const auto p = simulate_panel(DgpSpec::named("FinMix-1"), 40000, 4, 17);
  const auto e = cml_estimate(p, ModelSpec::bc_ar1());
  CHECK(e.converged);
  CHECK(std::abs(e.theta.beta(0) + 1.0) < 4 * std::sqrt(e.covariance(0, 0)));
  CHECK(e.gradient_norm < 1e-8);
}

TEST_CASE("cml_estimate for the duration and covariate models") {
  auto rng = make_engine(8, 0);
  std::uniform_real_distribution<double> U(0, 1);
  std::normal_distribution<double> Z(0, 1);
  const double b1 = 0.4, b2 = 0.9, beta = -0.5, gamma = 0.8;
  std::vector<Individual> dur, cov;
  for (int i = 0; i < 40000; ++i) {
    const double a = Z(rng);
    Individual d;
    d.id = std::to_string(i);
    d.y.resize(5);
    d.y[0] = U(rng) < oracle::L(a);
    int run = d.y[0];
    for (int t = 1; t < 5; ++t) {
      double u = a;
      if (d.y[t - 1]) u += run >= 2 ? b2 : b1;
      d.y[t] = U(rng) < oracle::L(u);
      run = d.y[t] ? run + 1 : 0;
    }
    dur.push_back(d);

    Individual c;
    c.id = d.id;
    c.y.resize(4);
    c.x.resize(4);
    for (auto& x : c.x) x = U(rng) < 0.5 ? 0.0 : 1.0;
    c.y[0] = U(rng) < oracle::L(a + gamma * c.x[0]);
    for (int t = 1; t < 4; ++t) c.y[t] = U(rng) < oracle::L(a + beta * c.y[t - 1] + gamma * c.x[t]);
    cov.push_back(c);
  }
  const auto ed = cml_estimate(Panel(dur, 2), ModelSpec::bc_dur(2));
  CHECK(std::abs(ed.theta.beta(0) - b1) < 4 * std::sqrt(ed.covariance(0, 0)));
  CHECK(std::abs(ed.theta.beta(1) - b2) < 4 * std::sqrt(ed.covariance(1, 1)));
  const auto ec = cml_estimate(Panel(cov, 2, 1), ModelSpec::bc_ar1_x(1));
  CHECK(std::abs(ec.theta.beta(0) - beta) < 4 * std::sqrt(ec.covariance(0, 0)));
  CHECK(std::abs(ec.theta.gamma(0) - gamma) < 4 * std::sqrt(ec.covariance(1, 1)));
}

TEST_CASE("multinomial diagonal-habit CML at beta = 0") {
  auto rng = make_engine(9, 0);
  std::normal_distribution<double> Z(0, 1);
  std::uniform_real_distribution<double> U(0, 1);
  const int J1 = 4;
  std::vector<Individual> people;
  for (int i = 0; i < 20000; ++i) {
    double a[J1] = {0.0, Z(rng), Z(rng), Z(rng)};
    double s = 0.0;
    for (double v : a) s += std::exp(v);
    Individual ind;
    ind.id = std::to_string(i);
    for (int t = 0; t < 4; ++t) {
      double u = U(rng) * s;
      int j = 0;
      while (j < J1 - 1 && (u -= std::exp(a[j])) > 0) ++j;
      ind.y.push_back(j);
    }
    people.push_back(ind);
  }
  const auto e = cml_estimate(Panel(people, J1), ModelSpec::mnl_diag_habit(J1));
  for (int j = 0; j < J1 - 1; ++j) CHECK(std::abs(e.theta.beta(j)) < 3 * std::sqrt(e.covariance(j, j)));
}

}  // TEST_SUITE
