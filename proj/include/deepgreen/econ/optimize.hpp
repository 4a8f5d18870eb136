#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace deepgreen::econ {

struct NewtonOptions {
  int max_iterations = 100;
  double gradient_tol = 1e-8;
  double relative_tol = 1e-10;
  // a relative-change stop is only accepted once the gradient is this small
  double stationarity_tol = 1e-6;
  // scaled gradient g' (-H)^-1 g; below this the remaining gain is noise
  double decrement_tol = 1e-12;
};

struct NewtonResult {
  Eigen::VectorXd theta;
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Objective for maximization. `value` may be called alone during line
/// search; `evaluate` fills value, gradient and Hessian.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<void(const Eigen::VectorXd&, double&, Eigen::VectorXd&, Eigen::MatrixXd&)> evaluate;
};

/// Newton ascent with step halving. When the negative Hessian is not
/// positive definite a multiple of the identity is added (Levenberg) until
/// it is.
inline NewtonResult maximize(const Objective& f, Eigen::VectorXd theta, const NewtonOptions& opt = {}) {
  NewtonResult r;
  const auto k = theta.size();
  double ll = 0.0;
  Eigen::VectorXd g(k);
  Eigen::MatrixXd H(k, k);
  f.evaluate(theta, ll, g, H);

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (k == 0 || g.cwiseAbs().maxCoeff() < opt.gradient_tol) {
      r.converged = true;
      break;
    }
    Eigen::MatrixXd A = -H;
    Eigen::VectorXd dir;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(g);
    } else {
      double lambda = 1e-6 * std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
      for (int tries = 0; tries < 60; ++tries, lambda *= 10.0) {
        Eigen::MatrixXd B = A + lambda * Eigen::MatrixXd::Identity(k, k);
        Eigen::LLT<Eigen::MatrixXd> reg(B);
        if (reg.info() == Eigen::Success) {
          dir = reg.solve(g);
          break;
        }
      }
      if (dir.size() == 0) dir = g;
    }
    const double decrement = g.dot(dir);
    if (std::isfinite(decrement) && decrement >= 0.0 && decrement < opt.decrement_tol) {
      r.converged = true;
      break;
    }

    double step = 1.0;
    Eigen::VectorXd next;
    double next_ll = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    const double slack = 1e-13 * std::max(1.0, std::abs(ll));
    for (int h = 0; h < 60; ++h, step *= 0.5) {
      next = theta + step * dir;
      next_ll = f.value(next);
      if (std::isfinite(next_ll) && next_ll >= ll - slack) {
        accepted = true;
        break;
      }
    }
    r.iterations = it + 1;
    if (!accepted) {
      r.line_search_failed = true;
      r.converged = g.cwiseAbs().maxCoeff() < opt.stationarity_tol;
      break;
    }
    const double change = std::abs(next_ll - ll) / std::max(std::abs(ll), 1e-300);
    theta = next;
    f.evaluate(theta, ll, g, H);
    if (g.cwiseAbs().maxCoeff() < opt.gradient_tol ||
        (change < opt.relative_tol && g.cwiseAbs().maxCoeff() < opt.stationarity_tol)) {
      r.converged = true;
      break;
    }
  }
  r.theta = std::move(theta);
  r.value = ll;
  r.gradient = std::move(g);
  r.hessian = std::move(H);
  return r;
}

}  // namespace deepgreen::econ
