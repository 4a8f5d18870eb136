#include <gtest/gtest.h>

#include <map>

#include "deepgreen/judge_a.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/util/random.hpp"

using namespace deepgreen;
using namespace deepgreen::judge;

namespace {

const std::string kYes = R"({"judgment":1,"confidence":0.9})";
const std::string kNo = R"({"judgment":0,"confidence":0.8})";

llm::PromptTemplate tpl(llm::Layer layer) {
  llm::PromptTemplate t;
  t.role_anchoring = "r";
  t.persona_setting = "p";
  t.task_description = "t";
  t.answer_template = "{judgment, confidence}";
  t.template_id = "t";
  t.layer = layer;
  return t;
}

segment::UniqueWordSequence s1(std::vector<std::string> words) {
  segment::UniqueWordSequence s;
  for (auto& w : words) {
    s.provenance[w].push_back({"f", 2022, 0});
    s.words.push_back(w);
  }
  return s;
}

segment::KeywordContextPair make_pair(std::string id, std::string firm, int year, std::string sentence) {
  segment::KeywordContextPair p;
  p.pair_id = std::move(id);
  p.firm_id = std::move(firm);
  p.year = year;
  p.keyword = "kw";
  p.sentence = std::move(sentence);
  return p;
}

PairVerdict verdict(std::string id, std::string firm, int year, int j, double conf = 0.9, Arm arm = Arm::Control) {
  PairVerdict v;
  v.pair_id = std::move(id);
  v.firm_id = std::move(firm);
  v.year = year;
  v.judgment = j;
  v.confidence = conf;
  v.arm = arm;
  return v;
}

}  // namespace

TEST(LayerA, DictionaryFromScript) {
  llm::MockBackend m("mock", {{"绿色", {kYes}}, {"环保", {kYes}}, {"利润", {kNo}}});
  const auto r = run_layer_a(s1({"绿色", "利润", "环保"}), m, tpl(llm::Layer::A));
  EXPECT_EQ(r.dictionary.size(), 2u);
  EXPECT_TRUE(r.dictionary.contains("环保"));
  EXPECT_FALSE(r.dictionary.contains("利润"));
  EXPECT_EQ(r.log.size(), 3u);
}

TEST(LayerA, AllZeroGivesEmptyDictionary) {
  llm::MockBackend m("mock", {}, {}, kNo);
  EXPECT_TRUE(run_layer_a(s1({"a", "b"}), m, tpl(llm::Layer::A)).dictionary.empty());
}

TEST(LayerA, PartitionAndReplay) {
  llm::MockBackend m("mock", {{"w0", {kYes}}, {"w1", {kNo}}, {"w2", {"bad"}}, {"w3", {"bad", kYes}}}, {}, kNo);
  std::vector<std::string> words;
  for (int i = 0; i < 10; ++i) words.push_back("w" + std::to_string(i));
  const auto r = run_layer_a(s1(words), m, tpl(llm::Layer::A), 4, 1);
  EXPECT_EQ(r.count(WordStatus::accepted) + r.count(WordStatus::rejected) + r.count(WordStatus::failed), 10u);
  EXPECT_EQ(r.count(WordStatus::failed), 1u);
  EXPECT_EQ(r.dictionary.size(), 2u);
  llm::ReplayBackend replay("mock", r.journal);
  const auto again = run_layer_a(s1(words), replay, tpl(llm::Layer::A), 4, 1);
  EXPECT_EQ(again.dictionary.to_json(), r.dictionary.to_json());
  EXPECT_THROW(run_layer_a(s1(words), m, tpl(llm::Layer::B)), Error);
}

TEST(Compare, PerfectAndConstantBackends) {
  validate::LabelSet labels;
  std::vector<std::string> sample;
  std::unordered_map<std::string, std::vector<std::string>> truth;
  for (int i = 0; i < 20; ++i) {
    const auto w = "w" + std::to_string(i);
    labels.labels[w] = i % 2;
    sample.push_back(w);
    truth[w] = {i % 2 ? kYes : kNo};
  }
  llm::MockBackend perfect("perfect", truth);
  llm::MockBackend constant("constant", {}, {}, R"({"judgment":1,"confidence":0.5})");
  const auto rep = compare_backends({sample}, labels, {{&constant, 4, 0}, {&perfect, 4, 0}}, tpl(llm::Layer::A));
  EXPECT_EQ(rep.backends[1].metrics.mean.acc, 1.0);
  EXPECT_DOUBLE_EQ(rep.backends[1].metrics.mean.mcc, 1.0);
  EXPECT_EQ(rep.backends[0].metrics.mean.acc, 0.5);
  EXPECT_EQ(rep.backends[0].metrics.mean.mcc, 0.0);
  EXPECT_EQ(rep.ranking.front(), "perfect");
  EXPECT_THROW(compare_backends({{"unlabelled"}}, labels, {{&perfect, 1, 0}}, tpl(llm::Layer::A)), Error);
}

TEST(Compare, ConcentratedConfidenceHasHigherPeak) {
  validate::LabelSet labels;
  std::vector<std::string> sample;
  std::unordered_map<std::string, std::vector<std::string>> tight, spread;
  for (int i = 0; i < 100; ++i) {
    const auto w = "w" + std::to_string(i);
    labels.labels[w] = 1;
    sample.push_back(w);
    tight[w] = {R"({"judgment":1,"confidence":0.9})"};
    spread[w] = {R"({"judgment":1,"confidence":)" + std::to_string((i + 0.5) / 100.0) + "}"};
  }
  llm::MockBackend a("tight", tight), b("spread", spread);
  const auto rep = compare_backends({sample}, labels, {{&a, 1, 0}, {&b, 1, 0}}, tpl(llm::Layer::A));
  EXPECT_GT(rep.backends[0].peak_density, 5 * rep.backends[1].peak_density);
  EXPECT_LT(rep.backends[0].confidence_sd, rep.backends[1].confidence_sd);
}

TEST(LayerB, SloganVersusAction) {
  llm::MockBackend m("mock", {},
                     {{"cleans the polluted gases", kYes}, {"##carbon emission## policy", kNo}});
  const std::vector<segment::KeywordContextPair> pairs{
      make_pair("p1", "f", 2022, "The corporation responds to the ##carbon emission## policy"),
      make_pair("p2", "f", 2022, "The corporation responds to the ##carbon emission## policy and cleans the polluted gases")};
  auto r = run_layer_b(pairs, AblationArm{}, m, tpl(llm::Layer::B));
  ASSERT_EQ(r.verdicts.size(), 2u);
  EXPECT_EQ(r.verdicts[0].judgment, 0);
  EXPECT_EQ(r.verdicts[1].judgment, 1);
  EXPECT_EQ(r.verdicts[1].arm, Arm::Control);
}

TEST(LayerB, ArmsShapeThePrompt) {
  std::vector<corpus::EnvSection> secs(1);
  secs[0].firm_id = "f";
  secs[0].year = 2022;
  secs[0].text = "甲。乙节能。丙。";
  segment::TextAnalyzer an;
  segment::ContextIndex ctx(secs, an);
  auto p = make_pair("p", "f", 2022, "乙##节能##。");
  p.sentence_index = 1;
  LayerBOptions opts;
  opts.context = &ctx;
  AblationArm arm;
  arm.arm = Arm::ExtendedContext;
  arm.context_window_sentences = 1;
  const auto item = layer_b_item(p, arm, tpl(llm::Layer::B), opts);
  EXPECT_NE(item.prompt.find("甲。乙##节能##。丙。"), std::string::npos);

  llm::SnapshotRetriever snap(std::map<std::string, std::vector<std::string>>{{"乙节能。", {"passage one"}}});
  opts.retriever = &snap;
  arm.arm = Arm::RAG;
  const auto rag = layer_b_item(p, arm, tpl(llm::Layer::B), opts);
  EXPECT_NE(rag.prompt.find("[1] passage one"), std::string::npos);
  EXPECT_EQ(rag.prompt.find("甲。"), std::string::npos);
  opts.retriever = nullptr;
  EXPECT_THROW(layer_b_item(p, arm, tpl(llm::Layer::B), opts), Error);
}

TEST(LayerB, FailuresAreNotCounted) {
  llm::MockBackend m("mock", {{"bad", {"nope"}}}, {}, kYes);
  const std::vector<segment::KeywordContextPair> pairs{make_pair("ok", "f", 2022, "##a##"),
                                                       make_pair("bad", "f", 2022, "##b##")};
  LayerBOptions opts;
  opts.max_retries = 1;
  const auto r = run_layer_b(pairs, AblationArm{}, m, tpl(llm::Layer::B), opts);
  EXPECT_EQ(r.verdicts.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].attempts, 2);
  const auto xy = count_xy(r.verdicts);
  EXPECT_EQ(xy[0].x + xy[0].y, 1);
}

TEST(CountXY, ExamplesAndErrors) {
  const auto xy = count_xy({verdict("a", "f", 2022, 1), verdict("b", "f", 2022, 1), verdict("c", "f", 2022, 0)},
                           {{"g", 2022}});
  ASSERT_EQ(xy.size(), 2u);
  EXPECT_EQ(xy[0], (XYCount{"f", 2022, 2, 1}));
  EXPECT_EQ(xy[1], (XYCount{"g", 2022, 0, 0}));
  EXPECT_THROW(count_xy({verdict("a", "f", 2022, 1), verdict("a", "f", 2022, 0)}), Error);
  EXPECT_THROW(count_xy({verdict("a", "f", 2022, 1), verdict("b", "f", 2022, 0, 0.9, Arm::RAG)}), Error);
}

TEST(CountXY, MatchesBruteForceGroupBy) {
  Rng r(12);
  std::vector<PairVerdict> vs;
  for (int i = 0; i < 400; ++i)
    vs.push_back(verdict("p" + std::to_string(i), "f" + std::to_string(r.below(7)), 2020 + static_cast<int>(r.below(3)),
                         static_cast<int>(r.below(2))));
  for (const auto& c : count_xy(vs)) {
    long x = 0, y = 0;
    for (const auto& v : vs)
      if (v.firm_id == c.firm_id && v.year == c.year) (v.judgment ? x : y)++;
    EXPECT_EQ(c.x, x);
    EXPECT_EQ(c.y, y);
  }
}

TEST(Ablation, IdenticalArmsIdenticalMetrics) {
  validate::LabelSet labels;
  ArmVerdicts a{Arm::Control, {}, {}}, b{Arm::RAG, {}, {}};
  for (int i = 0; i < 30; ++i) {
    const auto id = "p" + std::to_string(i);
    labels.labels[id] = i % 3 == 0;
    a.verdicts.push_back(verdict(id, "f", 2022, i % 2, 0.6 + 0.01 * i, Arm::Control));
    b.verdicts.push_back(verdict(id, "f", 2022, i % 2, 0.6 + 0.01 * i, Arm::RAG));
  }
  const auto rep = ablation_report({a, b}, labels);
  EXPECT_EQ(rep.arm(Arm::Control).metrics.acc, rep.arm(Arm::RAG).metrics.acc);
  EXPECT_EQ(rep.arm(Arm::Control).metrics.mcc, rep.arm(Arm::RAG).metrics.mcc);
  EXPECT_THROW(rep.arm(Arm::ExtendedContext), Error);
}

TEST(Ablation, BucketArithmetic) {
  validate::LabelSet labels;
  ArmVerdicts a{Arm::Control, {}, {}};
  for (int i = 0; i < 20; ++i) {
    const auto id = "p" + std::to_string(i);
    labels.labels[id] = 1;
    const bool high = i < 10;
    a.verdicts.push_back(verdict(id, "f", 2022, high ? 1 : 0, high ? 0.97 : 0.3));
  }
  const auto rep = ablation_report({a}, labels);
  const auto& b = rep.arms[0].buckets;
  EXPECT_EQ(b.front().accuracy(), 0.0);
  EXPECT_EQ(b.front().n, 10u);
  EXPECT_EQ(b.back().accuracy(), 1.0);
  EXPECT_EQ(b.back().n, 10u);
}

TEST(Ablation, BucketsAggregateToOverallAccuracy) {
  Rng r(99);
  validate::LabelSet labels;
  ArmVerdicts a{Arm::Control, {}, {}};
  for (int i = 0; i < 500; ++i) {
    const auto id = "p" + std::to_string(i);
    labels.labels[id] = static_cast<int>(r.below(2));
    a.verdicts.push_back(verdict(id, "f", 2022, static_cast<int>(r.below(2)), r.uniform()));
  }
  a.verdicts.back().confidence = 1.0;
  const auto rep = ablation_report({a}, labels, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0});
  double weighted = 0;
  std::size_t total = 0;
  for (const auto& b : rep.arms[0].buckets) {
    weighted += b.accuracy() * static_cast<double>(b.n);
    total += b.n;
  }
  EXPECT_EQ(total, 500u);
  EXPECT_NEAR(weighted / 500.0, rep.arms[0].metrics.acc, 1e-12);
}

TEST(Ablation, BookTitleComposition) {
  EXPECT_TRUE(in_book_title("依据《##环境保护##法》"));
  EXPECT_TRUE(in_book_title("取得##《排污许可证》##"));
  EXPECT_FALSE(in_book_title("《标准》发布后开展##节能##"));
  EXPECT_FALSE(in_book_title("开展##节能##"));
}
