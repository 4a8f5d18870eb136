#include <gtest/gtest.h>

#include "deepgreen/econ.hpp"
#include "support/dgp.hpp"

using namespace deepgreen;
using namespace deepgreen::econ;

namespace {

ModelSpec spec() {
  ModelSpec s;
  s.name = "base";
  s.dependent = "y";
  s.regressors = {"x", "z"};
  s.fixed_effects.year = true;
  return s;
}

}  // namespace

TEST(Moderation, NegativeInteractionRecovered) {
  Rng r(1);
  Panel p;
  for (int i = 0; i < 6000; ++i) {
    const double x = r.bernoulli(0.4), m = r.bernoulli(0.5), z = r.normal();
    const double eta = -0.3 + 0.8 * x + 0.2 * m - 0.6 * x * m - 0.3 * z;
    p.add_row("f" + std::to_string(i / 3), 2019 + i % 3, "I", {{"y", r.bernoulli(dgp::logistic(eta)) ? 1.0 : 0.0},
                                                                {"x", x}, {"z", z}, {"media", m}});
  }
  const auto res = moderation(p, spec(), "Media");
  EXPECT_LT(res.logit.coefficient("x#media"), 0.0);
  EXPECT_LT(res.logit.p_value("x#media"), 0.05);
  EXPECT_LT(res.probit.coefficient("x#media"), 0.0);
  EXPECT_EQ(res.logit.names[2], "media");
  EXPECT_THROW(moderation(p, spec(), "nope"), Error);
}

TEST(Moderation, CollinearInteractionWarns) {
  Rng r(2);
  Panel p;
  for (int i = 0; i < 600; ++i) {
    const double x = r.bernoulli(0.5);
    p.add_row("f" + std::to_string(i), 2020, "I",
              {{"y", r.bernoulli(0.5) ? 1.0 : 0.0}, {"x", x}, {"z", r.normal()}, {"m", 1.0}});
  }
  ModelSpec s = spec();
  s.fixed_effects.year = false;
  const auto res = moderation(p, s, "m");
  ASSERT_FALSE(res.logit.warnings.empty());
  EXPECT_NE(res.logit.warnings.back().find("dropped as collinear"), std::string::npos);
}

TEST(Heterogeneity, EffectOnlyInOneGroup) {
  Rng r(3);
  Panel p;
  for (int i = 0; i < 8000; ++i) {
    const double g = i % 2, x = r.bernoulli(0.4), z = r.normal();
    const double eta = -0.2 + (g == 1 ? 0.9 : 0.0) * x - 0.3 * z;
    p.add_row("f" + std::to_string(i / 4), 2019 + i % 4, "I",
              {{"y", r.bernoulli(dgp::logistic(eta)) ? 1.0 : 0.0}, {"x", x}, {"z", z}, {"soe", g}});
  }
  const auto fits = heterogeneity(p, spec(), "soe", {{0.0, "non-SOE"}, {1.0, "SOE"}});
  ASSERT_EQ(fits.size(), 2u);
  EXPECT_EQ(fits[0].label, "non-SOE");
  EXPECT_GT(fits[0].result->p_value("x"), 0.01);
  EXPECT_LT(fits[1].result->p_value("x"), 0.001);
  EXPECT_GT(fits[1].result->coefficient("x"), 0.0);
}

TEST(Heterogeneity, SmallGroupsSkipped) {
  Rng r(4);
  Panel p;
  for (int i = 0; i < 300; ++i)
    p.add_row("f" + std::to_string(i), 2020, "I",
              {{"y", r.bernoulli(0.5) ? 1.0 : 0.0}, {"x", r.bernoulli(0.5) ? 1.0 : 0.0}, {"z", r.normal()},
               {"grp", i < 8 ? 1.0 : 0.0}});
  ModelSpec s = spec();
  s.fixed_effects.year = false;
  const auto fits = heterogeneity(p, s, "grp");
  EXPECT_TRUE(fits[0].result.has_value());
  EXPECT_FALSE(fits[1].result.has_value());
  EXPECT_FALSE(fits[1].skipped.empty());
  EXPECT_EQ(fits[1].label, "grp=1");
}

TEST(Table, StarsAndLayout) {
  EXPECT_EQ(stars(0.005), "***");
  EXPECT_EQ(stars(0.03), "**");
  EXPECT_EQ(stars(0.07), "*");
  EXPECT_EQ(stars(0.2), "");
  const auto p = dgp::logit_panel({800, 3, 3}, {}, 5);
  auto s = spec();
  s.fixed_effects.industry = true;
  const auto a = estimate(p, s);
  s.family = Family::probit;
  const auto b = estimate(p, s);
  RegressionTable t({{"Logit", &a}, {"Probit", &b}});
  const auto rows = t.row_names();
  EXPECT_EQ(rows.front(), "x");
  EXPECT_EQ(rows.back(), "_cons");
  const auto cells = t.cells();
  EXPECT_EQ(cells[0][1], "Logit");
  bool found = false;
  for (const auto& row : cells)
    if (row[0] == "Ind FE") found = row[1] == "YES" && row[2] == "YES";
  EXPECT_TRUE(found);
  EXPECT_NE(t.to_csv().find("\"(1)\"") , 0u);
}
