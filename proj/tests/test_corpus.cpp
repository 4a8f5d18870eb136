#include <gtest/gtest.h>

#include <fstream>

#include "deepgreen/corpus.hpp"
#include "support/oracles.hpp"

using namespace deepgreen;
using namespace deepgreen::corpus;

namespace {

ReportDocument doc(std::string text) {
  ReportDocument d;
  d.firm_id = "600001";
  d.year = 2022;
  d.full_text = std::move(text);
  return d;
}

segment::TextAnalyzer analyzer() {
  segment::TextAnalyzer a;
  a.dictionary = std::make_shared<segment::SegmenterDictionary>(std::vector<std::string>{"公司", "废水", "达标", "排放"});
  a.stopwords = std::make_shared<segment::StopwordList>(std::vector<std::string>{"的"}, "t");
  return a;
}

}  // namespace

TEST(Extract, SingleSpanIncludesHeaderAndStopsAtEnd) {
  const auto s = extract_env_section(
      doc("第五节 环境和社会责任\n一、环境信息情况\n公司废水达标排放。\n二、社会责任工作情况\n捐赠。"),
      SectionPatternSet::defaults(), analyzer());
  EXPECT_EQ(s.text, "一、环境信息情况\n公司废水达标排放。\n");
  EXPECT_FALSE(s.ambiguous);
  EXPECT_EQ(s.sentence_count, 1u);
}

TEST(Extract, TwoSpansAreConcatenatedAndFlagged) {
  const auto s = extract_env_section(
      doc("一、环境信息情况\nA段。\n二、社会责任工作情况\nX。\n附注：环境信息补充\nB段。\n社会责任报告另行披露。"),
      SectionPatternSet::defaults(), analyzer());
  EXPECT_TRUE(s.ambiguous);
  EXPECT_EQ(s.text, "一、环境信息情况\nA段。\n\n环境信息补充\nB段。\n");
}

TEST(Extract, NoHeaderGivesEmptySection) {
  const auto s = extract_env_section(doc("年度经营情况良好。"), SectionPatternSet::defaults(), analyzer());
  EXPECT_TRUE(s.text.empty());
  EXPECT_EQ(s.word_count, 0u);
}

TEST(Extract, UnterminatedSpanRunsToEnd) {
  const auto s = extract_env_section(doc("前言。Environmental Information\nWe treat wastewater."),
                                     SectionPatternSet::defaults(), analyzer());
  EXPECT_EQ(s.text, "Environmental Information\nWe treat wastewater.");
}

TEST(Extract, MalformedInputs) {
  auto d = doc("x");
  d.firm_id.clear();
  EXPECT_THROW(extract_env_section(d, SectionPatternSet::defaults(), analyzer()), Error);
  EXPECT_THROW(extract_env_section(doc(std::string("\xff\xfe")), SectionPatternSet::defaults(), analyzer()), Error);
  EXPECT_THROW(extract_env_section(doc("x"), SectionPatternSet{{"("}, {"x"}}, analyzer()), Error);
  EXPECT_THROW(SectionPatternSet::from_json({{"start", nlohmann::json::array()}, {"end", {"x"}}}), Error);
}

TEST(Extract, CountsUseTheAnalyzer) {
  EnvSection s;
  s.text = "公司的废水达标排放。公司。";
  measure(s, analyzer());
  EXPECT_EQ(s.sentence_count, 2u);
  EXPECT_EQ(s.word_count, 6u);
  EXPECT_EQ(s.target_word_count, 5u);
}

TEST(Universe, ExcludesSpecialTreatmentAndFinancials) {
  FirmMeta m;
  EXPECT_TRUE(filter_universe(m));
  m.status_labels = {"ST"};
  EXPECT_FALSE(filter_universe(m));
  m.status_labels = {"*ST"};
  EXPECT_FALSE(filter_universe(m));
  m.status_labels = {"PT"};
  EXPECT_FALSE(filter_universe(m));
  m.status_labels.clear();
  m.is_financial = true;
  EXPECT_FALSE(filter_universe(m));
}

TEST(Stats, TwoSectionExample) {
  std::vector<EnvSection> secs(2);
  secs[1].sentence_count = 4;
  secs[1].word_count = 20;
  secs[1].target_word_count = 6;
  const auto t = corpus_stats(secs);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].summary.mean, 2.0);
  EXPECT_EQ(t[1].summary.mean, 10.0);
  EXPECT_EQ(t[2].summary.mean, 3.0);
  EXPECT_EQ(t[1].summary.min, 0.0);
  EXPECT_EQ(t[1].summary.max, 20.0);
  EXPECT_THROW(corpus_stats({}), Error);
  EXPECT_NE(stats_csv(t).find("Target Words"), std::string::npos);
}

TEST(Files, MetaAndReportsLoad) {
  const auto dir = oracle::temp_dir("corpus");
  std::ofstream(dir / "meta.csv") << "firm_id,industry_code,status_labels,is_financial,listing_year\n"
                                     "a,C26,,0,2001\nb,J66,ST|PT,true,1999\n";
  const auto meta = load_meta(dir / "meta.csv");
  ASSERT_EQ(meta.size(), 2u);
  EXPECT_EQ(meta[1].status_labels.size(), 2u);
  EXPECT_TRUE(meta[1].is_financial);
  MetaIndex idx(meta);
  EXPECT_EQ(idx.find("a", 2022)->industry_code, "C26");
  EXPECT_EQ(idx.find("z", 2022), nullptr);

  std::filesystem::create_directories(dir / "reports");
  std::ofstream(dir / "reports" / "b_2022.txt") << "text b";
  std::ofstream(dir / "reports" / "a_2021.txt") << "text a";
  std::ofstream(dir / "reports" / "more.jsonl") << R"({"firm_id":"a","year":2020,"text":"t"})" << "\n";
  const auto docs = load_reports(dir / "reports");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].year, 2020);
  EXPECT_EQ(docs[2].firm_id, "b");

  const auto s = extract_env_section(doc("环境信息 公司。"), SectionPatternSet::defaults(), analyzer());
  std::ofstream(dir / "s.jsonl") << sections_jsonl({s});
  EXPECT_EQ(load_sections(dir / "s.jsonl")[0].text, s.text);
}
