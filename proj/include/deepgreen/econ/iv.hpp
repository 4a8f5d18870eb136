#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/glm.hpp"
#include "deepgreen/econ/optimize.hpp"
#include "deepgreen/econ/result.hpp"
#include "deepgreen/error.hpp"

namespace deepgreen::econ {

/// One endogenous regressor d, exogenous columns W (intercept first) and
/// excluded instruments Z.
struct IvData {
  Eigen::VectorXd y;
  Eigen::VectorXd d;
  Eigen::MatrixXd W;
  Eigen::MatrixXd Z;
  std::string d_name = "d";
  std::vector<std::string> w_names;
  std::vector<std::string> z_names;
  std::vector<std::string> fe_columns;

  Eigen::Index n() const { return y.size(); }

  /// [W, Z]
  Eigen::MatrixXd first_stage_matrix() const {
    Eigen::MatrixXd M(n(), W.cols() + Z.cols());
    M << W, Z;
    return M;
  }
  /// W with `v` inserted after the intercept.
  Eigen::MatrixXd second_stage_matrix(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd M(n(), W.cols() + 1);
    M.col(0) = W.col(0);
    M.col(1) = v;
    if (W.cols() > 1) M.rightCols(W.cols() - 1) = W.rightCols(W.cols() - 1);
    return M;
  }
  std::vector<std::string> second_stage_names() const {
    std::vector<std::string> out{w_names.front(), d_name};
    out.insert(out.end(), w_names.begin() + 1, w_names.end());
    return out;
  }
  std::vector<std::string> first_stage_names() const {
    auto out = w_names;
    out.insert(out.end(), z_names.begin(), z_names.end());
    return out;
  }
};

struct IvResult {
  EstimationResult first_stage;
  EstimationResult two_sls;
  EstimationResult fiml;
  double first_stage_f = 0.0;
  bool weak_instrument = false;
};

namespace detail {

inline DesignMatrix plain_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  DesignMatrix d;
  d.X = X;
  d.y = y;
  d.names = std::move(names);
  return d;
}

}  // namespace detail

/// First stage of d on [W, Z]; F is the Wald statistic for Z = 0 divided by
/// the number of excluded instruments.
inline EstimationResult first_stage(const IvData& data, double& f_stat) {
  FitOptions opt;
  opt.model_name = "first stage";
  auto fs = fit_ols(detail::plain_design(data.first_stage_matrix(), data.d, data.first_stage_names()), opt);
  const auto q = data.Z.cols();
  const Eigen::VectorXd b = fs.coef.tail(q);
  const Eigen::MatrixXd V = fs.vcov.bottomRightCorner(q, q);
  f_stat = b.dot(V.ldlt().solve(b)) / static_cast<double>(q);
  fs.extras["F"] = f_stat;
  return fs;
}

inline EstimationResult fit_2sls(const IvData& data, const EstimationResult& fs) {
  const Eigen::VectorXd dhat = data.first_stage_matrix() * fs.coef;
  const Eigen::MatrixXd Xhat = data.second_stage_matrix(dhat);
  const Eigen::MatrixXd X = data.second_stage_matrix(data.d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xhat);
  EstimationResult r;
  r.model = "2sls";
  r.family = Family::ols;
  r.names = data.second_stage_names();
  r.fe_columns = data.fe_columns;
  r.coef = qr.solve(data.y);
  const Eigen::VectorXd e = data.y - X * r.coef;
  const auto n = data.n(), k = X.cols();
  r.n = static_cast<std::size_t>(n);
  r.df_resid = static_cast<double>(n - k);
  r.t_statistics = true;
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  r.vcov = (e.squaredNorm() / r.df_resid) * Rinv * Rinv.transpose();
  const double tss = (data.y.array() - data.y.mean()).square().sum();
  r.r2 = 1.0 - e.squaredNorm() / tss;
  r.converged = true;
  return r;
}

/// Log-likelihood of the triangular system
///   d = [W Z] pi + u1,  y = [W d] beta + u2,  (u1, u2) ~ N(0, Sigma)
/// in (pi, beta, ln s1, ln s2, atanh rho). With fix_rho the last parameter
/// is absent and rho = 0.
struct TriangularLikelihood {
  const IvData& data;
  bool fix_rho = false;
  Eigen::MatrixXd Zf, X;

  TriangularLikelihood(const IvData& d, bool fix) : data(d), fix_rho(fix), Zf(d.first_stage_matrix()), X(d.second_stage_matrix(d.d)) {}

  Eigen::Index kz() const { return Zf.cols(); }
  Eigen::Index kx() const { return X.cols(); }
  Eigen::Index size() const { return kz() + kx() + (fix_rho ? 2 : 3); }

  double value(const Eigen::VectorXd& t, Eigen::VectorXd* grad = nullptr) const {
    const double ls1 = t(kz() + kx()), ls2 = t(kz() + kx() + 1);
    const double s1 = std::exp(ls1), s2 = std::exp(ls2);
    const double rho = fix_rho ? 0.0 : std::tanh(t(kz() + kx() + 2));
    const double q = 1.0 / (1.0 - rho * rho);
    const Eigen::ArrayXd e1 = (data.d - Zf * t.head(kz())).array() / s1;
    const Eigen::ArrayXd e2 = (data.y - X * t.segment(kz(), kx())).array() / s2;
    const auto n = static_cast<double>(data.n());
    const Eigen::ArrayXd Q = e1.square() - 2.0 * rho * e1 * e2 + e2.square();
    const double ll = -n * (std::log(2.0 * std::numbers::pi) + ls1 + ls2 + 0.5 * std::log(1.0 - rho * rho)) - 0.5 * q * Q.sum();
    if (grad) {
      grad->resize(size());
      const Eigen::ArrayXd a1 = q * (e1 - rho * e2), a2 = q * (e2 - rho * e1);
      grad->head(kz()) = Zf.transpose() * (a1 / s1).matrix();
      grad->segment(kz(), kx()) = X.transpose() * (a2 / s2).matrix();
      (*grad)(kz() + kx()) = -n + (a1 * e1).sum();
      (*grad)(kz() + kx() + 1) = -n + (a2 * e2).sum();
      if (!fix_rho) (*grad)(kz() + kx() + 2) = (rho + e1 * e2 - rho * q * Q).sum();
    }
    return ll;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& t) const {
    const auto p = size();
    Eigen::MatrixXd H(p, p);
    Eigen::VectorXd gp, gm;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(t(j)));
      Eigen::VectorXd tp = t, tm = t;
      tp(j) += h;
      tm(j) -= h;
      value(tp, &gp);
      value(tm, &gm);
      H.col(j) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }
};

inline EstimationResult fit_fiml(const IvData& data, const EstimationResult& fs, const EstimationResult& tsls,
                                 bool fix_rho, const NewtonOptions& newton = {}) {
  TriangularLikelihood lik(data, fix_rho);
  Eigen::VectorXd t(lik.size());
  t.head(lik.kz()) = fs.coef;
  Eigen::VectorXd beta0 = tsls.coef;
  if (fix_rho) {
    FitOptions opt;
    beta0 = fit_ols(detail::plain_design(lik.X, data.y, data.second_stage_names()), opt).coef;
  }
  t.segment(lik.kz(), lik.kx()) = beta0;
  const Eigen::VectorXd u1 = data.d - lik.Zf * fs.coef;
  const Eigen::VectorXd u2 = data.y - lik.X * beta0;
  const double n = static_cast<double>(data.n());
  const double s1 = std::sqrt(u1.squaredNorm() / n), s2 = std::sqrt(u2.squaredNorm() / n);
  t(lik.kz() + lik.kx()) = std::log(s1);
  t(lik.kz() + lik.kx() + 1) = std::log(s2);
  if (!fix_rho) t(lik.kz() + lik.kx() + 2) = std::atanh(std::clamp(u1.dot(u2) / (n * s1 * s2), -0.95, 0.95));

  Objective f;
  f.value = [&](const Eigen::VectorXd& th) { return lik.value(th); };
  f.evaluate = [&](const Eigen::VectorXd& th, double& ll, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
    ll = lik.value(th, &g);
    H = lik.hessian(th);
  };
  auto nr = maximize(f, t, newton);

  EstimationResult r;
  r.model = fix_rho ? "fiml (rho = 0)" : "fiml";
  r.family = Family::ols;
  r.n = static_cast<std::size_t>(data.n());
  r.fe_columns = data.fe_columns;
  for (const auto& nm : data.first_stage_names()) r.names.push_back("first:" + nm);
  for (const auto& nm : data.second_stage_names()) r.names.push_back(nm);
  r.names.push_back("lnsig1");
  r.names.push_back("lnsig2");
  if (!fix_rho) r.names.push_back("atanh_rho");
  r.coef = nr.theta;
  r.log_likelihood = nr.value;
  r.iterations = nr.iterations;
  r.converged = nr.converged;
  if (!nr.converged) r.diagnosis = "iteration limit";
  if (!detail::invert_information(nr.hessian, r.vcov)) r.warnings.push_back("observed information not positive definite");
  const auto base = lik.kz() + lik.kx();
  r.extras["lnsig1"] = nr.theta(base);
  r.extras["lnsig2"] = nr.theta(base + 1);
  r.extras["atanh_rho"] = fix_rho ? 0.0 : nr.theta(base + 2);
  r.extras["rho"] = fix_rho ? 0.0 : std::tanh(nr.theta(base + 2));
  return r;
}

inline IvResult fit_iv(const IvData& data, bool fix_rho = false) {
  if (data.n() == 0) throw Error(ErrorCode::NoLag, "no observations with an instrument");
  IvResult out;
  out.first_stage = first_stage(data, out.first_stage_f);
  out.weak_instrument = out.first_stage_f < 10.0;
  out.two_sls = fit_2sls(data, out.first_stage);
  out.fiml = fit_fiml(data, out.first_stage, out.two_sls, fix_rho);
  for (auto* r : {&out.first_stage, &out.two_sls, &out.fiml}) {
    r->extras["first_stage_F"] = out.first_stage_f;
    if (out.weak_instrument) r->warnings.push_back("WeakInstrument: first-stage F = " + std::to_string(out.first_stage_f));
  }
  return out;
}

struct IvSpec {
  std::string name = "iv";
  std::string dependent;
  std::string endogenous;
  std::string instrument;  // empty: once-lagged endogenous variable
  std::vector<std::string> controls;
  FixedEffects fixed_effects;
  bool dynamic = false;  // adds the once-lagged dependent variable as a control
  bool fix_rho = false;

  static IvSpec from_json(const nlohmann::json& j) {
    IvSpec s;
    s.name = j.value("name", std::string("iv"));
    s.dependent = j.at("dependent").get<std::string>();
    s.endogenous = j.at("endogenous").get<std::string>();
    s.instrument = j.value("instrument", std::string{});
    s.controls = j.value("controls", std::vector<std::string>{});
    for (const auto& fe : j.value("fixed_effects", std::vector<std::string>{})) {
      if (fe == "year") s.fixed_effects.year = true;
      else if (fe == "industry") s.fixed_effects.industry = true;
      else if (fe == "year_industry") s.fixed_effects.year_industry = true;
      else throw Error(ErrorCode::InvalidConfig, "unknown fixed effect '" + fe + "'");
    }
    s.dynamic = j.value("dynamic", false);
    s.fix_rho = j.value("fix_rho", false);
    return s;
  }
};

/// Builds lags as needed and assembles IvData from the panel. Rows without
/// a lag drop out, so the first year of every firm is lost.
inline IvData iv_data(Panel panel, const IvSpec& spec) {
  std::string instrument = spec.instrument;
  if (instrument.empty()) {
    instrument = lower(spec.endogenous) + "_lag";
    if (panel.add_lag(spec.endogenous, instrument) == 0)
      throw Error(ErrorCode::NoLag, "no firm has two consecutive years of '" + spec.endogenous + "'");
  }
  ModelSpec ms;
  ms.name = spec.name;
  ms.dependent = spec.dependent;
  ms.regressors.push_back(spec.endogenous);
  for (const auto& c : spec.controls) ms.regressors.push_back(c);
  if (spec.dynamic) {
    const auto ylag = lower(spec.dependent) + "_lag";
    if (panel.add_lag(spec.dependent, ylag) == 0)
      throw Error(ErrorCode::NoLag, "no firm has two consecutive years of '" + spec.dependent + "'");
    ms.regressors.push_back(ylag);
  }
  ms.fixed_effects = spec.fixed_effects;
  ms.family = Family::ols;
  DesignMatrix d;
  try {
    d = build_design(panel, ms, DesignOptions{{instrument}});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyAfterFilter) throw Error(ErrorCode::NoLag, "no complete rows with a lagged instrument");
    throw;
  }
  IvData data;
  data.y = d.y;
  const auto c = d.index_of(spec.endogenous);
  data.d = d.X.col(c);
  data.d_name = lower(spec.endogenous);
  data.W.resize(d.X.rows(), d.X.cols() - 1);
  for (Eigen::Index j = 0, o = 0; j < d.X.cols(); ++j) {
    if (j == c) continue;
    data.W.col(o++) = d.X.col(j);
    data.w_names.push_back(d.names[static_cast<std::size_t>(j)]);
  }
  const auto& zc = panel.column(instrument);
  data.Z.resize(d.X.rows(), 1);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) data.Z(i, 0) = zc[d.rows[static_cast<std::size_t>(i)]];
  data.z_names.push_back(lower(instrument));
  data.fe_columns = d.fe_columns;
  return data;
}

inline IvResult fit_iv(const Panel& panel, const IvSpec& spec) {
  auto r = fit_iv(iv_data(panel, spec), spec.fix_rho);
  r.first_stage.model = spec.name + " first stage";
  r.two_sls.model = spec.name + " 2sls";
  r.fiml.model = spec.name + " fiml";
  return r;
}

}  // namespace deepgreen::econ
