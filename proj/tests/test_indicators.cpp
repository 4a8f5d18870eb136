#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "deepgreen/indicators.hpp"
#include "deepgreen/util/random.hpp"

using namespace deepgreen;
using indicators::FirmYearIndicator;

namespace {

FirmYearIndicator row(std::string firm, int year, std::string ind, long x, long y, std::optional<double> esg) {
  FirmYearIndicator r;
  r.firm_id = std::move(firm);
  r.year = year;
  r.industry_code = std::move(ind);
  r.x = x;
  r.y = y;
  r.gi = indicators::compute_gi(x, y);
  r.esg_e = esg;
  return r;
}

}  // namespace

TEST(Gi, Examples) {
  EXPECT_EQ(indicators::compute_gi(3, 1), 0.75);
  EXPECT_EQ(indicators::compute_gi(0, 0), 0.0);
  EXPECT_EQ(indicators::compute_gi(0, 7), 0.0);
  EXPECT_THROW(indicators::compute_gi(-1, 2), Error);
}

TEST(Gi, ExhaustiveProperties) {
  for (long x = 0; x <= 50; ++x)
    for (long y = 0; y <= 50; ++y) {
      const double g = indicators::compute_gi(x, y);
      ASSERT_GE(g, 0.0);
      ASSERT_LE(g, 1.0);
      if (x + y == 0) {
        ASSERT_EQ(g, 0.0);
      }
      for (long k = 2; k <= 4; ++k) ASSERT_DOUBLE_EQ(indicators::compute_gi(k * x, k * y), g);
    }
}

TEST(GroupMeans, Examples) {
  std::vector<FirmYearIndicator> one{row("a", 2020, "C1", 1, 1, 60.0)};
  auto m = indicators::compute_group_means(one, indicators::Grouping::IndustryYear);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].gi_mean, 0.5);
  EXPECT_EQ(m[0].esg_e_mean, 60.0);

  std::vector<FirmYearIndicator> two{row("a", 2020, "C1", 1, 4, 50.0), row("b", 2020, "C1", 3, 2, 70.0)};
  m = indicators::compute_group_means(two, indicators::Grouping::IndustryYear);
  EXPECT_NEAR(m[0].gi_mean, 0.4, 1e-15);
  EXPECT_THROW(indicators::compute_group_means({}, indicators::Grouping::Industry), Error);
  two[0].industry_code.clear();
  EXPECT_THROW(indicators::compute_group_means(two, indicators::Grouping::Industry), Error);
}

TEST(Flag, StrictInequalities) {
  indicators::GroupMeans g;
  g.key = {"C1", 2020};
  g.gi_mean = 0.5;
  g.esg_e_mean = 70;
  auto r = row("a", 2020, "C1", 0, 0, 60.0);
  r.gi = 0.8;
  EXPECT_EQ(indicators::flag_greenwashing(r, g), 1);
  r.gi = 0.5;
  EXPECT_EQ(indicators::flag_greenwashing(r, g), 0);
  r.gi = 0.8;
  r.esg_e = 70.0;
  EXPECT_EQ(indicators::flag_greenwashing(r, g), 0);
  r.esg_e.reset();
  EXPECT_EQ(indicators::flag_greenwashing(r, g), 0);
  r.industry_code = "C2";
  EXPECT_THROW(indicators::flag_greenwashing(r, g), Error);
}

// Brute-force group-by over a synthetic panel, written without the
// library's grouping code.
TEST(Flag, MatchesBruteForceGroupBy) {
  Rng rng(31);
  std::vector<FirmYearIndicator> rows;
  for (int i = 0; i < 500; ++i) {
    const int year = 2018 + static_cast<int>(rng.below(4));
    const std::string ind = "C" + std::to_string(rng.below(6));
    std::optional<double> esg;
    if (rng.uniform() > 0.1) esg = 40.0 + 50.0 * rng.uniform();
    rows.push_back(row("f" + std::to_string(i), year, ind, static_cast<long>(rng.below(12)),
                       static_cast<long>(rng.below(12)), esg));
  }
  for (auto grouping : {indicators::Grouping::IndustryYear, indicators::Grouping::Industry}) {
    auto flagged = rows;
    indicators::apply_flags(flagged, grouping);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double gsum = 0, esum = 0;
      int n = 0;
      for (const auto& o : rows) {
        if (o.industry_code != rows[i].industry_code || !o.esg_e) continue;
        if (grouping == indicators::Grouping::IndustryYear && o.year != rows[i].year) continue;
        gsum += o.gi;
        esum += *o.esg_e;
        ++n;
      }
      int expected = 0;
      if (rows[i].esg_e && n > 0) expected = rows[i].gi > gsum / n && *rows[i].esg_e < esum / n;
      ASSERT_EQ(flagged[i].greenwashing, expected) << "row " << i;
    }
  }
}

TEST(Indicators, CsvRoundTrip) {
  std::vector<FirmYearIndicator> rows{row("a", 2020, "C1", 3, 1, 55.5), row("b", 2020, "C1", 0, 0, std::nullopt)};
  indicators::apply_flags(rows, indicators::Grouping::IndustryYear);
  const auto path = std::filesystem::temp_directory_path() / "deepgreen_ind.csv";
  std::ofstream(path) << indicators::indicators_csv(rows);
  const auto back = indicators::load_indicators(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].gi, 0.75);
  EXPECT_EQ(*back[0].esg_e, 55.5);
  EXPECT_TRUE(back[1].esg_missing());
}
