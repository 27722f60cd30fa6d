#pragma once

#include <Eigen/Dense>

#include <functional>

namespace feame {

struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct NewtonOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  int max_backtracks = 50;
};

struct NewtonResult {
  Eigen::VectorXd x;
  Evaluation at;
  int iterations = 0;
  bool converged = false;
};

/// Maximizes a smooth function with Newton steps, Levenberg-Marquardt
/// damping when the Hessian is not negative definite, and backtracking on
/// the objective. Stops when ||g||_inf < gradient_tolerance.
NewtonResult newton_maximize(const std::function<Evaluation(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             const NewtonOptions& options = {});

/// Symmetrized central-difference Jacobian of a gradient function.
Eigen::MatrixXd fd_hessian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
                           const Eigen::VectorXd& x, double step = 1e-5);

/// Central-difference gradient of a scalar function.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double step = 1e-6);

/// (-H)^{-1}, falling back to a pseudo-inverse on flat directions.
Eigen::MatrixXd inverse_information(const Eigen::MatrixXd& hessian);

}  // namespace feame
