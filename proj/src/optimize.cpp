#include "feame/optimize.hpp"

#include <cmath>
#include <limits>

namespace feame {

namespace {

double inf_norm(const Eigen::VectorXd& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff(); }

}  // namespace

NewtonResult newton_maximize(const std::function<Evaluation(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             const NewtonOptions& options) {
  NewtonResult r;
  r.x = std::move(x0);
  r.at = f(r.x);
  const auto n = r.x.size();
  double lambda = 0.0;
  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    if (!std::isfinite(r.at.value)) break;
    if (inf_norm(r.at.gradient) < options.gradient_tolerance) {
      r.converged = true;
      return r;
    }
    const Eigen::MatrixXd neg_h = -0.5 * (r.at.hessian + r.at.hessian.transpose());
    Eigen::VectorXd step;
    // Shift -H until it is positive definite.
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg_h + lambda * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(r.at.gradient);
        if (step.allFinite()) break;
      }
      lambda = lambda == 0.0 ? 1e-6 * std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff()) : lambda * 10.0;
      step.resize(0);
    }
    if (step.size() == 0) break;

    bool improved = false;
    double t = 1.0;
    for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
      Eigen::VectorXd candidate = r.x + t * step;
      Evaluation e = f(candidate);
      if (std::isfinite(e.value) && e.value >= r.at.value - 1e-12 * std::abs(r.at.value)) {
        // Plateaus count as progress only if the gradient shrinks.
        if (e.value > r.at.value || inf_norm(e.gradient) < inf_norm(r.at.gradient)) {
          r.x = std::move(candidate);
          r.at = std::move(e);
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      if (lambda > 1e12) break;
      lambda = lambda == 0.0 ? 1e-3 : lambda * 10.0;
      continue;
    }
    lambda = t == 1.0 ? lambda * 0.1 : lambda;
    if (lambda < 1e-10) lambda = 0.0;
  }
  r.converged = std::isfinite(r.at.value) && inf_norm(r.at.gradient) < options.gradient_tolerance;
  return r;
}

Eigen::MatrixXd fd_hessian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
                           const Eigen::VectorXd& x, double step) {
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double hk = step * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += hk;
    xm(k) -= hk;
    h.col(k) = (gradient(xp) - gradient(xm)) / (2.0 * hk);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double hk = step * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += hk;
    xm(k) -= hk;
    g(k) = (f(xp) - f(xm)) / (2.0 * hk);
  }
  return g;
}

Eigen::MatrixXd inverse_information(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd info = -0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > 1e-12 * top && ev(k) > 0.0) inv(k) = 1.0 / ev(k);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace feame
