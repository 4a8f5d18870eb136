#include <gtest/gtest.h>

#include "deepgreen/econ.hpp"
#include "support/dgp.hpp"
#include "support/oracles.hpp"

using namespace deepgreen;
using namespace deepgreen::econ;

namespace {

ModelSpec spec() {
  ModelSpec s;
  s.name = "m";
  s.dependent = "y";
  s.regressors = {"x", "z"};
  s.fixed_effects.year = true;
  return s;
}

}  // namespace

TEST(Placebo, DeterministicAcrossThreadCounts) {
  const auto p = dgp::logit_panel({600, 3, 2}, {}, 1);
  PlaceboOptions o;
  o.replications = 200;
  o.seed = 77;
  o.threads = 1;
  const auto a = placebo(p, spec(), o);
  o.threads = 4;
  const auto b = placebo(p, spec(), o);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.density_csv(), b.density_csv());
  o.seed = 78;
  EXPECT_NE(placebo(p, spec(), o).mean, a.mean);
}

TEST(Placebo, PValueAndInterval) {
  const auto p = dgp::logit_panel({1500, 3, 2}, {-0.3, 1.0, -0.4, true}, 2);
  PlaceboOptions o;
  o.replications = 200;
  o.seed = 5;
  const auto r = placebo(p, spec(), o);
  const auto coefs = r.coefficients();
  EXPECT_EQ(coefs.size(), 200u);
  std::size_t extreme = 0;
  for (double b : coefs) extreme += std::abs(b - r.mean) >= std::abs(r.actual - r.mean);
  EXPECT_DOUBLE_EQ(r.p_value, (1.0 + extreme) / 201.0);
  EXPECT_NEAR(r.mean, oracle::two_pass_mean(coefs), 1e-12);
  EXPECT_GT(r.actual, r.upper_95);
  EXPECT_NEAR(std::abs(r.mean), 0.0, 0.05);
}

TEST(Placebo, BernoulliModeKeepsRate) {
  const auto p = dgp::logit_panel({600, 3, 2}, {}, 3);
  PlaceboOptions o;
  o.replications = 200;
  o.mode = PlaceboMode::bernoulli;
  EXPECT_EQ(placebo(p, spec(), o).draws.size(), 200u);
  EXPECT_THROW(parse_placebo_mode("shuffle"), Error);
}

TEST(Placebo, TooFewReplicationsRejected) {
  const auto p = dgp::logit_panel({100, 2, 2}, {}, 4);
  PlaceboOptions o;
  o.replications = 50;
  EXPECT_THROW(placebo(p, spec(), o), Error);
}
