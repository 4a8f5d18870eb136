#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "deepgreen/validate.hpp"
#include "support/oracles.hpp"

using namespace deepgreen;
using validate::ConfusionCounts;

namespace {

ConfusionCounts cc(std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
  ConfusionCounts c;
  c.tp = tp;
  c.fn = fn;
  c.fp = fp;
  c.tn = tn;
  return c;
}

ConfusionCounts random_table(Rng& r) {
  auto c = cc(r.below(200), r.below(200), r.below(200), r.below(200));
  if (c.total() == 0) c.tn = 1;
  return c;
}

}  // namespace

TEST(Metrics, WorkedExamples) {
  const auto c = cc(40, 10, 5, 45);
  EXPECT_EQ(validate::acc(c), 0.85);
  EXPECT_EQ(validate::f1(c), 80.0 / 95.0);
  EXPECT_EQ(validate::mcc(c), 1750.0 / std::sqrt(45.0 * 50.0 * 50.0 * 55.0));
  EXPECT_NEAR(validate::mcc(c), 0.7035, 5e-5);
}

TEST(Metrics, TrivialTables) {
  EXPECT_EQ(validate::acc(cc(50, 0, 0, 50)), 1.0);
  EXPECT_EQ(validate::acc(cc(25, 25, 25, 25)), 0.5);
  EXPECT_EQ(validate::f1(cc(50, 0, 0, 50)), 1.0);
  EXPECT_EQ(validate::f1(cc(0, 10, 10, 80)), 0.0);
  EXPECT_DOUBLE_EQ(validate::mcc(cc(50, 0, 0, 50)), 1.0);
  EXPECT_EQ(validate::mcc(cc(25, 25, 25, 25)), 0.0);
}

TEST(Metrics, DegenerateConventions) {
  EXPECT_THROW(validate::acc(ConfusionCounts{}), Error);
  EXPECT_EQ(validate::f1(cc(0, 0, 0, 7)), 1.0);
  EXPECT_THROW(validate::f1(ConfusionCounts{}), Error);
  EXPECT_EQ(validate::mcc(cc(10, 0, 0, 0)), 0.0);
}

TEST(Metrics, ConstantPositivePredictorOnBalancedSample) {
  std::vector<int> pred(100, 1), actual(100, 0);
  std::fill(actual.begin(), actual.begin() + 50, 1);
  const auto m = validate::metrics(validate::confusion(pred, actual));
  EXPECT_EQ(m.acc, 0.5);
  EXPECT_EQ(m.mcc, 0.0);
}

TEST(Metrics, RandomTablesMatchDirectArithmetic) {
  Rng r(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_table(r);
    const double tp = double(c.tp), fn = double(c.fn), fp = double(c.fp), tn = double(c.tn);
    EXPECT_NEAR(validate::acc(c), (tp + tn) / (tp + tn + fp + fn), 1e-12);
    if (2 * tp + fn + fp > 0) {
      EXPECT_NEAR(validate::f1(c), 2 * tp / (2 * tp + fn + fp), 1e-12);
    }
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    EXPECT_NEAR(validate::mcc(c), den == 0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den), 1e-12);
  }
}

TEST(Metrics, RangesAndClassSwap) {
  Rng r(77);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_table(r);
    const auto s = cc(c.tn, c.fp, c.fn, c.tp);
    const double m = validate::mcc(c);
    EXPECT_GE(m, -1.0);
    EXPECT_LE(m, 1.0);
    EXPECT_GE(validate::acc(c), 0.0);
    EXPECT_LE(validate::acc(c), 1.0);
    EXPECT_DOUBLE_EQ(validate::acc(c), validate::acc(s));
    EXPECT_NEAR(m, validate::mcc(s), 1e-15);
  }
}

TEST(Metrics, VerdictLogAgreesWithRebuiltCounts) {
  Rng r(5);
  std::vector<int> p, a;
  ConfusionCounts manual;
  for (int i = 0; i < 500; ++i) {
    p.push_back(static_cast<int>(r.below(2)));
    a.push_back(static_cast<int>(r.below(2)));
    (p.back() ? (a.back() ? manual.tp : manual.fp) : (a.back() ? manual.fn : manual.tn))++;
  }
  EXPECT_EQ(validate::confusion(p, a), manual);
  EXPECT_THROW(validate::confusion({1}, {1, 0}), Error);
}

TEST(Sampling, WholePopulationAndDeterminism) {
  validate::SamplingPlan plan;
  plan.n_per_replicate = 50;
  plan.replicates = 1;
  plan.seed = 9;
  auto all = validate::draw_samples(plan, 50)[0];
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);
  plan.replicates = 3;
  EXPECT_EQ(validate::draw_samples(plan, 80), validate::draw_samples(plan, 80));
}

TEST(Sampling, ReplicatesAreDuplicateFree) {
  validate::SamplingPlan plan;
  plan.n_per_replicate = 100;
  plan.replicates = 10;
  plan.seed = 1;
  const auto sets = validate::draw_samples(plan, 1000);
  ASSERT_EQ(sets.size(), 10u);
  for (const auto& s : sets) {
    EXPECT_EQ(s.size(), 100u);
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 100u);
    for (auto v : s) EXPECT_LT(v, 1000u);
  }
  EXPECT_NE(sets[0], sets[1]);
}

TEST(Sampling, InfeasiblePlans) {
  validate::SamplingPlan plan;
  plan.n_per_replicate = 10;
  EXPECT_THROW(validate::draw_samples(plan, 0), Error);
  EXPECT_THROW(validate::draw_samples(plan, 5), Error);
}

TEST(Sampling, InclusionIsUniform) {
  validate::SamplingPlan plan;
  plan.n_per_replicate = 3;
  plan.replicates = 6000;
  plan.seed = 4;
  std::vector<int> hits(10, 0);
  for (const auto& s : validate::draw_samples(plan, 10))
    for (auto v : s) ++hits[v];
  // each item is included with probability 0.3
  const double sd = std::sqrt(6000 * 0.3 * 0.7);
  for (int h : hits) EXPECT_NEAR(h, 1800.0, 4 * sd);
}

TEST(ConfidenceDensity, SpikeAndFlat) {
  const auto spike = validate::confidence_density(std::vector<double>(30, 0.9), 10);
  int nonzero = 0;
  for (auto c : spike.counts) nonzero += c > 0;
  EXPECT_EQ(nonzero, 1);
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
  const auto flat = validate::confidence_density(grid, 10);
  for (double d : flat.density) EXPECT_NEAR(d, 1.0, 1e-12);
  EXPECT_THROW(validate::confidence_density({}), Error);
  EXPECT_THROW(validate::confidence_density({1.2}), Error);
}

TEST(ConfidenceDensity, MixtureBinsWithinBinomialBand) {
  // 0.7 U(0.8, 1) + 0.3 U(0, 1)
  Rng r(11);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(r.uniform() < 0.7 ? 0.8 + 0.2 * r.uniform() : r.uniform());
  const auto h = validate::confidence_density(v, 10);
  for (std::size_t b = 0; b < 10; ++b) {
    const double p = 0.3 * 0.1 + (b >= 8 ? 0.7 * 0.5 : 0.0);
    const double expected = 1000 * p, sd = std::sqrt(1000 * p * (1 - p));
    EXPECT_NEAR(static_cast<double>(h.counts[b]), expected, 3 * sd) << "bin " << b;
  }
}

TEST(Labels, MajorityVoteAndTies) {
  const auto set = validate::adjudicate({{"w1", "a", 1}, {"w1", "b", 1}, {"w1", "c", 0},
                                         {"w2", "a", 0}, {"w2", "b", 1}, {"w3", "a", 0}});
  EXPECT_EQ(set.at("w1"), 1);
  EXPECT_FALSE(set.has("w2"));
  EXPECT_EQ(set.at("w3"), 0);
  EXPECT_EQ(set.ties, std::vector<std::string>{"w2"});
  EXPECT_EQ(set.disagreements.size(), 2u);
  EXPECT_THROW(set.at("w9"), Error);
  EXPECT_THROW(validate::adjudicate({{"x", "a", 2}}), Error);
}

TEST(Labels, LoadsTwoColumnFile) {
  const auto dir = oracle::temp_dir("labels");
  std::ofstream(dir / "l.csv") << "word,label\n绿色,1\n公司,0\n";
  const auto set = validate::load_labels(dir / "l.csv");
  EXPECT_EQ(set.at("绿色"), 1);
  EXPECT_EQ(set.at("公司"), 0);
}

TEST(Replicates, SummaryIsMeanAndSd) {
  std::vector<validate::Metrics> reps{validate::metrics(cc(40, 10, 5, 45)), validate::metrics(cc(50, 0, 0, 50))};
  const auto s = validate::summarize_replicates(reps);
  EXPECT_DOUBLE_EQ(s.mean.acc, (0.85 + 1.0) / 2);
  EXPECT_NEAR(s.acc_sd, oracle::two_pass_sd({0.85, 1.0}), 1e-15);
  EXPECT_EQ(s.mean.counts.tp, 90u);
}
