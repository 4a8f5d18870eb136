#include <gtest/gtest.h>

#include "deepgreen/econ.hpp"
#include "support/dgp.hpp"
#include "support/oracles.hpp"

using namespace deepgreen;
using namespace deepgreen::econ;

TEST(Matching, WorkedExampleMatchesExhaustiveOracle) {
  const std::vector<double> t{0.8, 0.6}, c{0.79, 0.61, 0.2};
  const auto m = match_nearest(t, c);
  const auto best = oracle::exhaustive_matching(t, c);
  ASSERT_EQ(m.size(), 2u);
  for (auto [ti, ci] : m) EXPECT_EQ(ci, best[ti]);
  EXPECT_EQ(best[0], 0u);
  EXPECT_EQ(best[1], 1u);
}

TEST(Matching, TiesGoToLowerControlIndex) {
  const auto m = match_nearest({0.5}, {0.75, 0.25, 0.75});
  EXPECT_EQ(m[0].second, 0u);
  EXPECT_EQ(match_nearest({0.5}, {0.75, 0.25, 0.625})[0].second, 2u);
}

TEST(Matching, WithoutReplacementAndCaliper) {
  const auto m = match_nearest({0.9, 0.85}, {0.88, 0.1});
  EXPECT_EQ(m[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(m[1], (std::pair<std::size_t, std::size_t>{1, 1}));
  EXPECT_EQ(match_nearest({0.9, 0.85}, {0.88, 0.1}, 0.05).size(), 1u);
  EXPECT_THROW(match_nearest({0.1, 0.2}, {0.3}), Error);
}

// On well-separated scores greedy matching is optimal; compare against the
// exhaustive oracle on random small instances where that holds.
TEST(Matching, AgreesWithOracleOnSeparatedScores) {
  Rng r(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t, c;
    for (int i = 0; i < 3; ++i) {
      const double base = 0.2 * i + 0.1;
      t.push_back(base + 0.01 * r.uniform());
      c.push_back(base + 0.01 * r.uniform());
    }
    for (int i = 0; i < 2; ++i) c.push_back(0.9 + 0.05 * r.uniform());
    const auto best = oracle::exhaustive_matching(t, c);
    for (auto [ti, ci] : match_nearest(t, c)) EXPECT_EQ(ci, best[ti]);
  }
}

TEST(Bias, Formula) {
  EXPECT_NEAR(standardized_bias(1.0, 0.0, 1.0, 1.0), 100.0, 1e-12);
  EXPECT_NEAR(standardized_bias(0.5, 0.2, 0.09, 0.09), 100.0, 1e-12);
  EXPECT_EQ(standardized_bias(1.0, 1.0, 0.0, 0.0), 0.0);
}

TEST(Psm, BalancesConfoundedSampleAndRecoversSign) {
  const auto p = dgp::confounded_panel(4000, 0.8, 21);
  PsmSpec s;
  s.treatment = "treat";
  s.covariates = {"size", "lev"};
  ModelSpec out;
  out.name = "outcome";
  out.dependent = "y";
  out.regressors = {"treat", "size", "lev"};
  s.outcome = out;
  const auto r = psm(p, s);
  EXPECT_EQ(r.matches.size(), r.n_treated);
  for (const auto& b : r.balance) {
    EXPECT_GT(std::abs(b.bias_before), 10.0) << b.covariate;
    EXPECT_LT(std::abs(b.bias_after), 10.0) << b.covariate;
  }
  ASSERT_TRUE(r.post_logit);
  EXPECT_GT(r.post_logit->coefficient("treat"), 0.0);
  EXPECT_GT(r.post_probit->coefficient("treat"), 0.0);
  EXPECT_EQ(r.post_logit->n, 2 * r.matches.size());
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("balance"));
}
