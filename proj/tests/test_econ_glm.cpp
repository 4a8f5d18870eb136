#include <gtest/gtest.h>

#include <cmath>

#include "deepgreen/econ.hpp"
#include "support/dgp.hpp"
#include "support/oracles.hpp"

using namespace deepgreen;
using namespace deepgreen::econ;

namespace {

ModelSpec spec(std::vector<std::string> regs, Family f, bool fe = false) {
  ModelSpec s;
  s.name = "m";
  s.dependent = "y";
  s.regressors = std::move(regs);
  s.family = f;
  s.fixed_effects.year = fe;
  s.fixed_effects.industry = fe;
  return s;
}

DesignMatrix intercept_only(std::size_t n, std::size_t ones) {
  DesignMatrix d;
  d.X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  d.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  d.y.head(static_cast<Eigen::Index>(ones)).setOnes();
  d.names = {"_cons"};
  return d;
}

}  // namespace

TEST(Logit, InterceptOnlyClosedForm) {
  const auto r = fit_logit(intercept_only(10000, 5171));
  EXPECT_NEAR(r.coef(0), std::log(0.5171 / 0.4829), 1e-10);
  EXPECT_NEAR(r.coef(0), 0.0684, 1e-4);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.pseudo_r2, 0.0, 1e-12);
}

TEST(Glm, GradientMatchesFiniteDifferences) {
  const auto p = dgp::negbin_counts({500, 3, 3}, 0.5, 8);
  const auto lp = dgp::logit_panel({500, 3, 3}, {}, 8);
  for (Family f : {Family::logit, Family::probit, Family::poisson, Family::negbin}) {
    const bool count = f == Family::poisson || f == Family::negbin;
    const auto d = build_design(count ? p : lp, spec({"x", "z"}, f, true));
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d.k() + (f == Family::negbin)), 0.1);
    if (f == Family::negbin) theta(theta.size() - 1) = -0.7;
    double ll;
    Eigen::VectorXd g;
    loglik_derivatives(f, d.X, d.y, theta, ll, &g, nullptr);
    const auto num = oracle::numeric_gradient([&](const Eigen::VectorXd& t) { return loglik(f, d.X, d.y, t); }, theta);
    for (Eigen::Index j = 0; j < g.size(); ++j)
      EXPECT_NEAR(g(j), num(j), 1e-6 * std::max(1.0, std::abs(num(j)))) << to_string(f) << " j=" << j;
    EXPECT_NEAR(ll, loglik(f, d.X, d.y, theta), 1e-9 * std::abs(ll));
  }
}

TEST(Glm, HessianMatchesFiniteDifferenceOfGradient) {
  const auto p = dgp::negbin_counts({400, 2, 2}, 0.5, 9);
  const auto d = build_design(p, spec({"x", "z"}, Family::negbin));
  Eigen::VectorXd theta(4);
  theta << 0.3, 0.2, -0.1, -0.5;
  double ll;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  loglik_derivatives(Family::negbin, d.X, d.y, theta, ll, &g, &H);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto col = oracle::numeric_gradient(
        [&](const Eigen::VectorXd& t) {
          double l;
          Eigen::VectorXd gg;
          loglik_derivatives(Family::negbin, d.X, d.y, t, l, &gg, nullptr);
          return gg(j);
        },
        theta);
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(H(j, k), col(k), 1e-5 * std::max(1.0, std::abs(col(k))));
  }
}

TEST(Logit, MatchesGridSearchOracle) {
  const auto p = dgp::logit_panel({5000, 1, 1}, {-0.3, 0.5, 0.0, false}, 10);
  const auto d = build_design(p, spec({"x"}, Family::logit));
  const auto r = fit_logit(d);
  const auto best = oracle::grid_maximize(
      [&](const Eigen::VectorXd& b) { return oracle::logit_loglik(d.X, d.y, b); }, Eigen::VectorXd::Zero(2), 2.0);
  EXPECT_NEAR(r.coef(0), best(0), 1e-4);
  EXPECT_NEAR(r.coef(1), best(1), 1e-4);
  EXPECT_NEAR(r.log_likelihood, oracle::logit_loglik(d.X, d.y, r.coef), 1e-8);
}

TEST(Logit, RecoversKnownCoefficients) {
  int covered = 0;
  const int reps = 20;
  for (int s = 0; s < reps; ++s) {
    const auto p = dgp::logit_panel({5000, 1, 1}, {-0.3, 0.5, -0.4, false}, 100 + s);
    const auto r = estimate(p, spec({"x", "z"}, Family::logit));
    covered += std::abs(r.coefficient("x") - 0.5) < 3 * r.std_error("x") &&
               std::abs(r.coefficient("z") + 0.4) < 3 * r.std_error("z");
  }
  EXPECT_GE(covered, reps - 2);
}

TEST(Probit, RecoversKnownCoefficients) {
  const auto p = dgp::logit_panel({5000, 1, 1}, {-0.3, 0.5, -0.4, false}, 11, true);
  const auto r = estimate(p, spec({"x", "z"}, Family::probit));
  EXPECT_LT(std::abs(r.coefficient("x") - 0.5), 3 * r.std_error("x"));
  EXPECT_LT(std::abs(r.coefficient("z") + 0.4), 3 * r.std_error("z"));
  EXPECT_TRUE(r.converged);
}

TEST(Logit, FixedEffectReferenceDoesNotMatter) {
  auto p = dgp::logit_panel({1200, 3, 4}, {}, 12);
  const auto a = estimate(p, spec({"x", "z"}, Family::logit, true));
  for (auto& ind : p.industry)
    if (ind == "I0") ind = "Z0";
  const auto b = estimate(p, spec({"x", "z"}, Family::logit, true));
  EXPECT_NE(a.names, b.names);
  EXPECT_NEAR(a.coefficient("x"), b.coefficient("x"), 1e-8);
  EXPECT_NEAR(a.std_error("x"), b.std_error("x"), 1e-8);
  EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-8);
}

TEST(Logit, PerfectSeparationIsDiagnosed) {
  Panel p;
  for (int i = 0; i < 40; ++i) p.add_row("f" + std::to_string(i), 2020, "A", {{"y", i < 20 ? 0.0 : 1.0}, {"x", i < 20 ? 0.0 : 1.0}});
  const auto r = estimate(p, spec({"x"}, Family::logit));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.diagnosis, "separation");
  const auto c = fit_logit(intercept_only(10, 0));
  EXPECT_EQ(c.diagnosis, "separation");
}

TEST(Glm, DependentVariableChecks) {
  Panel p;
  for (int i = 0; i < 10; ++i) p.add_row("f", 2010 + i, "A", {{"y", i % 3 == 0 ? 2.0 : 0.0}, {"x", double(i)}});
  EXPECT_THROW(estimate(p, spec({"x"}, Family::logit)), Error);
  p.set_column("y", std::vector<double>(10, -1.0));
  EXPECT_THROW(estimate(p, spec({"x"}, Family::poisson)), Error);
}

TEST(Ols, MatchesNormalEquations) {
  const auto p = dgp::negbin_counts({600, 3, 3}, 0.0, 13);
  const auto d = build_design(p, spec({"x", "z"}, Family::ols, true));
  const auto r = fit_ols(d);
  const auto b = oracle::normal_equations(d.X, d.y);
  for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_NEAR(r.coef(j), b(j), 1e-10);
  const Eigen::VectorXd e = d.y - d.X * b;
  const double s2 = e.squaredNorm() / static_cast<double>(d.n() - d.k());
  const Eigen::MatrixXd V = s2 * (d.X.transpose() * d.X).inverse();
  EXPECT_NEAR(r.std_error(1), std::sqrt(V(1, 1)), 1e-10);

  FitOptions rob;
  rob.vcov = VcovType::robust;
  const auto hr = fit_ols(d, rob);
  const Eigen::MatrixXd B = (d.X.transpose() * d.X).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(d.X.cols(), d.X.cols());
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) meat += e(i) * e(i) * d.X.row(i).transpose() * d.X.row(i);
  const Eigen::MatrixXd Vr = B * meat * B * (double(d.n()) / double(d.n() - d.k()));
  EXPECT_NEAR(hr.std_error(1), std::sqrt(Vr(1, 1)), 1e-10);

  FitOptions cl;
  cl.vcov = VcovType::cluster_firm;
  EXPECT_GT(fit_ols(d, cl).std_error(1), 0.0);
}

TEST(Poisson, InterceptClosedForm) {
  Panel p;
  const double ys[] = {0, 1, 3, 2, 0, 5, 1, 1};
  for (int i = 0; i < 8; ++i) p.add_row("f" + std::to_string(i), 2020, "A", {{"y", ys[i]}});
  const auto r = estimate(p, spec({}, Family::poisson));
  EXPECT_NEAR(r.coef(0), std::log(13.0 / 8.0), 1e-10);
}

TEST(NegBin, UnderdispersedCollapsesToPoisson) {
  const auto p = dgp::underdispersed_counts({3000, 3, 4}, 14);
  const auto pois = estimate(p, spec({"x", "z"}, Family::poisson, true));
  const auto nb = estimate(p, spec({"x", "z"}, Family::negbin, true));
  EXPECT_LT(nb.extras.at("lnalpha"), -10.0);
  EXPECT_EQ(nb.diagnosis, "boundary");
  for (std::size_t j = 0; j < pois.names.size(); ++j)
    EXPECT_NEAR(nb.coefficient(pois.names[j]), pois.coefficient(pois.names[j]), 1e-4) << pois.names[j];
}

TEST(NegBin, RecoversAlpha) {
  const auto p = dgp::negbin_counts({4000, 1, 1}, 0.5, 15);
  const auto r = estimate(p, spec({"x", "z"}, Family::negbin));
  EXPECT_TRUE(r.converged);
  EXPECT_LT(std::abs(r.coefficient("lnalpha") - std::log(0.5)), 3 * r.std_error("lnalpha"));
  EXPECT_LT(std::abs(r.coefficient("x") - 0.4), 3 * r.std_error("x"));
  EXPECT_GT(r.pseudo_r2, 0.0);
}

TEST(NegBin, ApproachesPoissonAsAlphaShrinks) {
  const auto p = dgp::negbin_counts({2000, 1, 1}, 0.0, 16);
  const auto d = build_design(p, spec({"x", "z"}, Family::poisson));
  const auto pois = fit_poisson(d);
  Eigen::VectorXd t(4);
  t.head(3) = pois.coef;
  t(3) = -25.0;
  EXPECT_NEAR(loglik(Family::negbin, d.X, d.y, t), pois.log_likelihood, 1e-6);
}

TEST(Ame, BruteForceAndNumericalDeltaMethod) {
  const auto p = dgp::logit_panel({2000, 3, 3}, {}, 17);
  for (Family f : {Family::logit, Family::probit}) {
    const auto d = build_design(p, spec({"x", "z"}, f, true));
    const auto r = fit(d, f);
    const auto me = ame_binary(r, d, "x");
    auto prob = [&](double eta) { return f == Family::logit ? 1.0 / (1.0 + std::exp(-eta)) : 0.5 * std::erfc(-eta / std::sqrt(2.0)); };
    auto ame_at = [&](const Eigen::VectorXd& b) {
      double s = 0;
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        Eigen::RowVectorXd row = d.X.row(i);
        row(1) = 1.0;
        const double p1 = prob(row.dot(b));
        row(1) = 0.0;
        s += p1 - prob(row.dot(b));
      }
      return s / static_cast<double>(d.n());
    };
    EXPECT_NEAR(me.ame, ame_at(r.coef), 1e-12);
    const auto g = oracle::numeric_gradient(ame_at, r.coef);
    EXPECT_NEAR(me.se, std::sqrt(g.dot(r.vcov * g)), 1e-6);
  }
  const auto d = build_design(p, spec({"z", "x"}, Family::logit));
  EXPECT_THROW(ame_binary(fit_logit(d), d, "z"), Error);
}

TEST(Result, JsonShape) {
  const auto p = dgp::logit_panel({500, 2, 2}, {}, 18);
  const auto r = estimate(p, spec({"x"}, Family::logit, true));
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("z"));
  EXPECT_TRUE(j["coefficients"].contains("x"));
  EXPECT_NEAR(j["pseudo_r2"].get<double>(), 1.0 - r.log_likelihood / r.extras.at("ll_null"), 1e-12);
  RegressionTable t({{"(1)", &r}});
  const auto text = t.to_text();
  EXPECT_NE(text.find("Year FE"), std::string::npos);
  EXPECT_EQ(text.find("year=2020"), std::string::npos);
}
