#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/optimize.hpp"
#include "deepgreen/econ/result.hpp"
#include "deepgreen/error.hpp"

namespace deepgreen::econ {

namespace detail {

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  const double z2 = z * z;
  return -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-z) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

/// phi(z) / Phi(z)
inline double inverse_mills(double z) {
  if (z > -30.0) return stats::normal_pdf(z) / (0.5 * std::erfc(-z / std::numbers::sqrt2));
  const double z2 = z * z;
  return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2));
}

// S(u) = (log1p(u) - u/(1+u)) / u^2 and its derivative, stable near 0.
inline double nb_s(double u) {
  if (u < 0.05) {
    double sum = 0.0, p = 1.0;
    for (int k = 2; k < 22; ++k, p *= u) sum += ((k % 2 == 0) ? 1.0 : -1.0) * (k - 1.0) / k * p;
    return sum;
  }
  return (std::log1p(u) - u / (1.0 + u)) / (u * u);
}
inline double nb_s_prime(double u) {
  if (u < 0.05) {
    double sum = 0.0, p = 1.0;
    for (int k = 3; k < 24; ++k, p *= u) sum += ((k % 2 == 0) ? 1.0 : -1.0) * (k - 1.0) * (k - 2.0) / k * p;
    return sum;
  }
  const double n = std::log1p(u) - u / (1.0 + u);
  return (u * u / ((1.0 + u) * (1.0 + u)) - 2.0 * n) / (u * u * u);
}

}  // namespace detail

/// Log-likelihood with analytic gradient and Hessian. For negbin the last
/// parameter is ln(alpha) of the NB2 variance mu + alpha mu^2.
inline void loglik_derivatives(Family family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& theta, double& ll, Eigen::VectorXd* grad, Eigen::MatrixXd* hess,
                               Eigen::MatrixXd* scores = nullptr) {
  const auto n = X.rows();
  const auto k = X.cols();
  const bool nb = family == Family::negbin;
  const auto p = k + (nb ? 1 : 0);
  const Eigen::VectorXd eta = X * theta.head(k);
  Eigen::VectorXd d1(n), d2(n);  // d ll_i / d eta, d2 ll_i / d eta2
  Eigen::VectorXd da(nb ? n : 0), daa(nb ? n : 0), dea(nb ? n : 0);
  ll = 0.0;
  const double alpha = nb ? std::exp(theta(k)) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = eta(i), yi = y(i);
    switch (family) {
      case Family::logit: {
        const double pr = detail::logistic(e);
        ll += yi * e - detail::softplus(e);
        d1(i) = yi - pr;
        d2(i) = -pr * (1.0 - pr);
        break;
      }
      case Family::probit: {
        const double q = yi > 0.5 ? 1.0 : -1.0;
        const double z = q * e;
        const double m = detail::inverse_mills(z);
        ll += detail::log_normal_cdf(z);
        d1(i) = q * m;
        d2(i) = -m * (z + m);
        break;
      }
      case Family::poisson: {
        const double mu = std::exp(e);
        ll += yi * e - mu - std::lgamma(yi + 1.0);
        d1(i) = yi - mu;
        d2(i) = -mu;
        break;
      }
      case Family::negbin: {
        const double mu = std::exp(e);
        const double u = alpha * mu;
        const long yc = std::lround(yi);
        double s_log = 0.0, s1 = 0.0, s2 = 0.0;
        for (long j = 1; j < yc; ++j) {
          const double ja = static_cast<double>(j) * alpha;
          s_log += std::log1p(ja);
          s1 += static_cast<double>(j) / (1.0 + ja);
          s2 += static_cast<double>(j) * j / ((1.0 + ja) * (1.0 + ja));
        }
        const double l1u = std::log1p(u);
        // -(y + 1/alpha) log1p(u), with the 1/alpha part as mu * log1p(u)/u
        const double r_term = u > 1e-300 ? mu * (l1u / u) : mu;
        ll += s_log - std::lgamma(yi + 1.0) - yi * l1u - r_term + yi * e;
        d1(i) = (yi - mu) / (1.0 + u);
        d2(i) = -mu * (1.0 + alpha * yi) / ((1.0 + u) * (1.0 + u));
        const double dl_dalpha = s1 - yi * mu / (1.0 + u) + mu * mu * detail::nb_s(u);
        const double d2l_dalpha2 = -s2 + yi * mu * mu / ((1.0 + u) * (1.0 + u)) + mu * mu * mu * detail::nb_s_prime(u);
        da(i) = alpha * dl_dalpha;
        daa(i) = alpha * dl_dalpha + alpha * alpha * d2l_dalpha2;
        dea(i) = -alpha * (yi - mu) * mu / ((1.0 + u) * (1.0 + u));
        break;
      }
      case Family::ols: throw Error(ErrorCode::InvalidConfig, "OLS has no iterative likelihood");
    }
  }
  if (grad) {
    grad->resize(p);
    grad->head(k) = X.transpose() * d1;
    if (nb) (*grad)(k) = da.sum();
  }
  if (hess) {
    hess->resize(p, p);
    hess->topLeftCorner(k, k) = X.transpose() * d2.asDiagonal() * X;
    if (nb) {
      Eigen::VectorXd cross = X.transpose() * dea;
      hess->block(0, k, k, 1) = cross;
      hess->block(k, 0, 1, k) = cross.transpose();
      (*hess)(k, k) = daa.sum();
    }
  }
  if (scores) {
    scores->resize(n, p);
    scores->leftCols(k) = d1.asDiagonal() * X;
    if (nb) scores->col(k) = da;
  }
}

inline double loglik(Family family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  double ll = 0.0;
  loglik_derivatives(family, X, y, theta, ll, nullptr, nullptr);
  return ll;
}

namespace detail {

inline void require_full_rank(const Eigen::MatrixXd& X, const std::string& model) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols())
    throw Error(ErrorCode::RankDeficient, "model '" + model + "': design matrix has rank " + std::to_string(qr.rank()) +
                                              " < " + std::to_string(X.cols()));
}

inline void check_dependent(Family family, const Eigen::VectorXd& y, const std::string& model) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    if ((family == Family::logit || family == Family::probit) && v != 0.0 && v != 1.0)
      throw Error(ErrorCode::NotBinary, "model '" + model + "': dependent variable is not 0/1");
    if ((family == Family::poisson || family == Family::negbin) && (v < 0.0 || v != std::floor(v)))
      throw Error(ErrorCode::NonCount, "model '" + model + "': dependent variable is not a non-negative integer");
  }
}

/// Inverse of the observed information; NaN when it is not positive definite.
inline bool invert_information(const Eigen::MatrixXd& hessian, Eigen::MatrixXd& out) {
  Eigen::MatrixXd info = -hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    out = Eigen::MatrixXd::Constant(info.rows(), info.cols(), std::numeric_limits<double>::quiet_NaN());
    return false;
  }
  out = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return true;
}

inline Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& scores, const std::vector<std::string>& clusters,
                                    std::size_t& groups) {
  std::map<std::string, Eigen::VectorXd> sums;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto& s = sums[clusters[static_cast<std::size_t>(i)]];
    if (s.size() == 0) s = Eigen::VectorXd::Zero(scores.cols());
    s += scores.row(i).transpose();
  }
  groups = sums.size();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(scores.cols(), scores.cols());
  for (const auto& [_, s] : sums) meat += s * s.transpose();
  return meat;
}

inline void fill_names(EstimationResult& r, const DesignMatrix& d, Family family) {
  r.names = d.names;
  if (family == Family::negbin) r.names.push_back("lnalpha");
  r.n = d.n();
  r.dropped = d.dropped;
  r.fe_columns = d.fe_columns;
}

}  // namespace detail

struct FitOptions {
  VcovType vcov = VcovType::conventional;
  NewtonOptions newton;
  std::string model_name;
  bool pseudo_r2 = true;  // skip the null-model fit when false (placebo replicates)
};

inline EstimationResult fit_ols(const DesignMatrix& d, const FitOptions& opt = {}) {
  detail::require_full_rank(d.X, opt.model_name);
  EstimationResult r;
  r.model = opt.model_name;
  r.family = Family::ols;
  detail::fill_names(r, d, Family::ols);
  const auto n = d.X.rows(), k = d.X.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.X);
  r.coef = qr.solve(d.y);
  const Eigen::VectorXd resid = d.y - d.X * r.coef;
  const double ssr = resid.squaredNorm();
  const double ybar = d.y.mean();
  const double tss = (d.y.array() - ybar).square().sum();
  r.df_resid = static_cast<double>(n - k);
  r.t_statistics = true;
  r.r2 = tss > 0 ? 1.0 - ssr / tss : std::numeric_limits<double>::quiet_NaN();
  r.extras["adj_r2"] = tss > 0 && r.df_resid > 0 ? 1.0 - (ssr / r.df_resid) / (tss / static_cast<double>(n - 1))
                                                  : std::numeric_limits<double>::quiet_NaN();
  r.log_likelihood = -0.5 * static_cast<double>(n) *
                     (std::log(2.0 * std::numbers::pi) + std::log(ssr / static_cast<double>(n)) + 1.0);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd bread = Rinv * Rinv.transpose();  // (X'X)^-1
  switch (opt.vcov) {
    case VcovType::conventional:
      r.vcov = (r.df_resid > 0 ? ssr / r.df_resid : std::numeric_limits<double>::quiet_NaN()) * bread;
      break;
    case VcovType::robust: {
      const Eigen::MatrixXd s = resid.asDiagonal() * d.X;
      r.vcov = bread * (s.transpose() * s) * bread * (static_cast<double>(n) / r.df_resid);
      break;
    }
    case VcovType::cluster_firm: {
      const Eigen::MatrixXd s = resid.asDiagonal() * d.X;
      std::size_t g = 0;
      const Eigen::MatrixXd meat = detail::cluster_meat(s, d.clusters, g);
      const double c = static_cast<double>(g) / static_cast<double>(g - 1) * static_cast<double>(n - 1) / r.df_resid;
      r.vcov = c * bread * meat * bread;
      break;
    }
  }
  r.converged = true;
  return r;
}

namespace detail {

inline Eigen::VectorXd start_values(Family family, const DesignMatrix& d) {
  const auto k = d.X.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k + (family == Family::negbin ? 1 : 0));
  const double m = d.y.mean();
  const auto c = d.index_of("_cons");
  if (c >= 0) {
    switch (family) {
      case Family::logit: theta(c) = std::log(m / (1.0 - m)); break;
      case Family::probit: {
        // inverse normal cdf by bisection; only a start value
        double lo = -10, hi = 10;
        for (int i = 0; i < 100; ++i) {
          const double mid = 0.5 * (lo + hi);
          (stats::normal_cdf(mid) < m ? lo : hi) = mid;
        }
        theta(c) = 0.5 * (lo + hi);
        break;
      }
      case Family::poisson:
      case Family::negbin: theta(c) = std::log(std::max(m, 1e-12)); break;
      case Family::ols: break;
    }
  }
  return theta;
}

inline NewtonResult run_newton(Family family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd theta,
                               const NewtonOptions& opt) {
  Objective f;
  f.value = [&](const Eigen::VectorXd& t) { return loglik(family, X, y, t); };
  f.evaluate = [&](const Eigen::VectorXd& t, double& ll, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
    loglik_derivatives(family, X, y, t, ll, &g, &H);
  };
  return maximize(f, std::move(theta), opt);
}

// Moment estimate of alpha from Poisson fitted means, used to start ln(alpha).
inline double nb_start_lnalpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd mu = (X * beta).array().exp();
  const double num = ((y - mu).array().square() - y.array()).sum();
  const double den = mu.array().square().sum();
  const double a = den > 0 ? num / den : 0.0;
  return a > 0 ? std::clamp(std::log(a), -5.0, 3.0) : -5.0;
}

}  // namespace detail

/// Maximum-likelihood fit of a logit, probit, Poisson or NB2 model.
/// NegBin starts from the Poisson solution; when ln(alpha) runs below -10
/// the fit is reported with diagnosis "boundary" (alpha -> 0).
inline EstimationResult fit_mle(const DesignMatrix& d, Family family, const FitOptions& opt = {}) {
  if (family == Family::ols) return fit_ols(d, opt);
  detail::check_dependent(family, d.y, opt.model_name);
  detail::require_full_rank(d.X, opt.model_name);
  EstimationResult r;
  r.model = opt.model_name;
  r.family = family;
  detail::fill_names(r, d, family);
  const auto k = d.X.cols();
  const double m = d.y.mean();

  if ((family == Family::logit || family == Family::probit) && (m == 0.0 || m == 1.0)) {
    r.coef = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    r.vcov = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    r.diagnosis = "separation";
    r.warnings.push_back("dependent variable does not vary");
    return r;
  }
  if ((family == Family::poisson || family == Family::negbin) && m == 0.0) {
    r.coef = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(r.names.size()), std::numeric_limits<double>::quiet_NaN());
    r.vcov = Eigen::MatrixXd::Constant(r.coef.size(), r.coef.size(), std::numeric_limits<double>::quiet_NaN());
    r.diagnosis = "all counts zero";
    return r;
  }

  Eigen::VectorXd theta;
  int extra_iterations = 0;
  if (family == Family::negbin) {
    auto pois = detail::run_newton(Family::poisson, d.X, d.y, detail::start_values(Family::poisson, d), opt.newton);
    extra_iterations = pois.iterations;
    theta.resize(k + 1);
    theta.head(k) = pois.theta;
    theta(k) = detail::nb_start_lnalpha(d.X, d.y, pois.theta);
  } else {
    theta = detail::start_values(family, d);
  }
  auto nr = detail::run_newton(family, d.X, d.y, theta, opt.newton);
  r.coef = nr.theta;
  r.log_likelihood = nr.value;
  r.iterations = nr.iterations + extra_iterations;
  r.converged = nr.converged;
  if (!nr.converged) r.diagnosis = nr.line_search_failed ? "line search failed" : "iteration limit";

  if (family == Family::logit || family == Family::probit) {
    const Eigen::VectorXd eta = d.X * nr.theta;
    double tail = 1.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pr = family == Family::logit ? detail::logistic(eta(i)) : stats::normal_cdf(eta(i));
      tail = std::min({tail, pr, 1.0 - pr});
    }
    if (tail < 1e-8) {
      r.converged = false;
      r.diagnosis = "separation";
      r.warnings.push_back("fitted probabilities numerically 0 or 1; coefficients diverge");
    }
  }
  if (family == Family::negbin) {
    r.extras["lnalpha"] = nr.theta(k);
    r.extras["alpha"] = std::exp(nr.theta(k));
    if (nr.theta(k) < -10.0) {
      r.diagnosis = "boundary";
      r.warnings.push_back("alpha at the boundary (no overdispersion)");
    }
  }

  Eigen::MatrixXd bread;
  if (!detail::invert_information(nr.hessian, bread)) r.warnings.push_back("observed information not positive definite");
  switch (opt.vcov) {
    case VcovType::conventional: r.vcov = bread; break;
    case VcovType::robust: {
      double ll;
      Eigen::MatrixXd s;
      loglik_derivatives(family, d.X, d.y, nr.theta, ll, nullptr, nullptr, &s);
      const double n = static_cast<double>(d.n());
      r.vcov = bread * (s.transpose() * s) * bread * (n / (n - 1.0));
      break;
    }
    case VcovType::cluster_firm: {
      double ll;
      Eigen::MatrixXd s;
      loglik_derivatives(family, d.X, d.y, nr.theta, ll, nullptr, nullptr, &s);
      std::size_t g = 0;
      const Eigen::MatrixXd meat = detail::cluster_meat(s, d.clusters, g);
      r.vcov = bread * meat * bread * (static_cast<double>(g) / static_cast<double>(g - 1));
      break;
    }
  }

  if (opt.pseudo_r2) {
    double ll0 = 0.0;
    const auto n = static_cast<double>(d.n());
    switch (family) {
      case Family::logit:
      case Family::probit: ll0 = n * (m * std::log(m) + (1.0 - m) * std::log(1.0 - m)); break;
      case Family::poisson:
        ll0 = 0.0;
        for (Eigen::Index i = 0; i < d.y.size(); ++i) ll0 += d.y(i) * std::log(m) - m - std::lgamma(d.y(i) + 1.0);
        break;
      case Family::negbin: {
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d.X.rows(), 1);
        Eigen::VectorXd t0(2);
        t0 << std::log(m), detail::nb_start_lnalpha(ones, d.y, Eigen::VectorXd::Constant(1, std::log(m)));
        ll0 = detail::run_newton(Family::negbin, ones, d.y, t0, opt.newton).value;
        break;
      }
      case Family::ols: break;
    }
    r.extras["ll_null"] = ll0;
    r.pseudo_r2 = 1.0 - r.log_likelihood / ll0;
  }
  return r;
}

inline EstimationResult fit_logit(const DesignMatrix& d, const FitOptions& opt = {}) { return fit_mle(d, Family::logit, opt); }
inline EstimationResult fit_probit(const DesignMatrix& d, const FitOptions& opt = {}) { return fit_mle(d, Family::probit, opt); }
inline EstimationResult fit_poisson(const DesignMatrix& d, const FitOptions& opt = {}) { return fit_mle(d, Family::poisson, opt); }
inline EstimationResult fit_negbin(const DesignMatrix& d, const FitOptions& opt = {}) { return fit_mle(d, Family::negbin, opt); }

inline EstimationResult fit(const DesignMatrix& d, Family family, const FitOptions& opt = {}) {
  return family == Family::ols ? fit_ols(d, opt) : fit_mle(d, family, opt);
}

/// build_design + fit for a declarative spec.
inline EstimationResult estimate(const Panel& panel, const ModelSpec& spec) {
  const auto d = build_design(panel, spec);
  FitOptions opt;
  opt.vcov = spec.vcov;
  opt.model_name = spec.name;
  return fit(d, spec.family, opt);
}

// --- average marginal effects ----------------------------------------------

struct MarginalEffect {
  std::string variable;
  double ame = 0.0;
  double se = 0.0;
  double z() const { return ame / se; }
  double p_value() const { return std::erfc(std::abs(z()) / std::numbers::sqrt2); }
};

/// Sample mean of P(y=1 | x, v=1) - P(y=1 | x, v=0) for a binary regressor
/// v of a logit or probit fit; SE by the delta method.
inline MarginalEffect ame_binary(const EstimationResult& fit, const DesignMatrix& d, const std::string& regressor) {
  if (fit.family != Family::logit && fit.family != Family::probit)
    throw Error(ErrorCode::InvalidConfig, "AME needs a logit or probit fit");
  const auto c = d.index_of(regressor);
  if (c < 0) throw Error(ErrorCode::InvalidConfig, "'" + regressor + "' is not in the fitted design");
  for (Eigen::Index i = 0; i < d.X.rows(); ++i)
    if (d.X(i, c) != 0.0 && d.X(i, c) != 1.0) throw Error(ErrorCode::NotBinary, "'" + regressor + "' is not 0/1");
  const Eigen::MatrixXd X1 = d.counterfactual(regressor, 1.0);
  const Eigen::MatrixXd X0 = d.counterfactual(regressor, 0.0);
  const Eigen::VectorXd beta = fit.coef.head(d.X.cols());
  const Eigen::VectorXd e1 = X1 * beta, e0 = X0 * beta;
  const auto n = static_cast<double>(d.n());
  double sum = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d.X.cols());
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    double p1, p0, f1, f0;
    if (fit.family == Family::logit) {
      p1 = detail::logistic(e1(i));
      p0 = detail::logistic(e0(i));
      f1 = p1 * (1.0 - p1);
      f0 = p0 * (1.0 - p0);
    } else {
      p1 = stats::normal_cdf(e1(i));
      p0 = stats::normal_cdf(e0(i));
      f1 = stats::normal_pdf(e1(i));
      f0 = stats::normal_pdf(e0(i));
    }
    sum += p1 - p0;
    grad += f1 * X1.row(i).transpose() - f0 * X0.row(i).transpose();
  }
  grad /= n;
  const Eigen::MatrixXd V = fit.vcov.topLeftCorner(d.X.cols(), d.X.cols());
  return MarginalEffect{lower(regressor), sum / n, std::sqrt(grad.dot(V * grad))};
}

}  // namespace deepgreen::econ
