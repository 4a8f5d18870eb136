#pragma once

// Synthetic corpus and panel with a known answer. Every firm-year's
// substantive and symbolic sentence counts are designed, the mock backend
// judges them by fixed rules, and the violation outcome is drawn from a
// logit whose greenwashing effect is tuned to a target AME.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/corpus.hpp"
#include "deepgreen/dictionary.hpp"
#include "deepgreen/indicators.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/llm/prompt.hpp"
#include "deepgreen/segment.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/util/csv.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/io.hpp"
#include "deepgreen/util/random.hpp"

namespace deepgreen::synthetic {

namespace fs = std::filesystem;

struct Options {
  std::size_t firms = 20;  // including the two firms the universe filter drops
  int years = 10;
  int first_year = 2014;
  std::uint64_t seed = 7;
  double target_ame = 0.07;
  double esg_missing = 0.05;
  int mean_green_sentences = 4;
  fs::path templates;      // directory with layer_a.json and layer_b.json
  std::optional<bool> validation;  // labels, ablation flips; default: small corpora only
  int placebo_replications = 200;
};

/// One row of the design: what the generator put in the text and drew for
/// the outcome.
struct FirmYearDesign {
  std::string firm_id;
  int year = 0;
  std::string industry;
  int substantive = 0;  // judged 1 by the mock
  int symbolic = 0;     // judged 0, labelled 0
  int missed = 0;       // judged 0, labelled 1
  long x = 0;
  long y = 0;
  std::optional<double> esg_e;
  int greenwashing = 0;
  double size = 0, lev = 0, roa = 0, gw_peer = 0;
  int soe = 0, esg_investor = 0, vio = 0, vio_num = 0;
};

struct Result {
  std::vector<FirmYearDesign> rows;
  double beta = 0.0;          // greenwashing coefficient in the outcome logit
  double designed_ame = 0.0;  // sample AME at the true parameters
  std::size_t pairs = 0;
  std::size_t flipped = 0;    // context-arm verdicts corrupted in the mock
};

inline const std::vector<std::string>& green_keywords() {
  static const std::vector<std::string> k{"污水处理", "清洁能源", "节能减排", "脱硫脱硝", "光伏发电", "余热回收",
                                          "固废处置", "废气治理", "绿色制造", "环保设施", "碳排放", "低碳"};
  return k;
}

/// A green word the main mock rejects in Layer A.
inline const std::string& missed_keyword() {
  static const std::string k = "生态保护";
  return k;
}

/// Words the lite backend gets wrong: rejects the first three, accepts the last.
inline const std::vector<std::string>& lite_errors() {
  static const std::vector<std::string> k{"脱硫脱硝", "余热回收", "固废处置", "发展战略"};
  return k;
}

inline const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> k{
      "公司", "投入", "专项资金", "建设", "项目", "报告期内", "完成", "改造", "通过", "验收", "始终", "倡导",
      "理念", "积极", "践行", "发展战略", "设备", "投入运行", "持续", "开展", "工作", "主要产品", "销售收入",
      "保持稳定", "召开", "股东大会", "两次", "完善", "内部控制", "制度", "加强", "安全生产", "管理", "培训",
      "重大", "环境信息", "员工", "职业健康", "体系"};
  return k;
}

inline const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> k{"的", "了", "并", "已", "和", "与", "在", "对", "等", "年", "一", "二", "公司", "报告期内"};
  return k;
}

inline const std::vector<std::string>& industries() {
  static const std::vector<std::string> k{"C13", "C26", "C39", "D44"};
  return k;
}

enum class Kind { Substantive, Symbolic, Missed, Neutral };

inline std::string sentence(Kind kind, const std::string& kw, std::uint64_t variant) {
  static const char* neutral[] = {"公司主要产品销售收入保持稳定。", "报告期内公司召开股东大会两次。",
                                  "公司持续完善内部控制制度。", "公司加强安全生产管理培训。",
                                  "公司持续开展员工职业健康体系建设工作。"};
  switch (kind) {
    case Kind::Substantive:
      return variant % 2 ? "报告期内公司完成" + kw + "改造并通过验收。" : "公司投入专项资金建设" + kw + "项目。";
    case Kind::Symbolic:
      return variant % 2 ? "公司积极践行" + kw + "发展战略。" : "公司始终倡导" + kw + "理念。";
    case Kind::Missed:
      return "公司" + kw + "设备已投入运行。";
    case Kind::Neutral:
      return neutral[variant % 5];
  }
  return {};
}

/// Ground truth for a keyword-context sentence, read off its template.
inline int true_label(const std::string& sentence_text) {
  for (const char* s : {"专项资金建设", "改造并通过验收", "设备已投入运行"})
    if (sentence_text.find(s) != std::string::npos) return 1;
  return 0;
}

inline std::string answer(int judgment, double confidence) {
  return nlohmann::json{{"judgment", judgment}, {"confidence", confidence}}.dump();
}

inline constexpr const char* kEvidence = "现场核查确认该设备运行正常并留存验收记录。";

/// Layer A answers by word and Layer B answers by rule on the marked
/// sentence; everything else is a low-confidence 0.
inline nlohmann::json mock_fixture(bool lite) {
  nlohmann::json responses = nlohmann::json::object();
  for (const auto& w : green_keywords()) responses[w] = answer(1, 0.95);
  if (lite) {
    for (std::size_t i = 0; i + 1 < lite_errors().size(); ++i) responses.erase(lite_errors()[i]);
    responses[lite_errors().back()] = answer(1, 0.7);
  }
  nlohmann::json rules = nlohmann::json::array({
      {{"contains", "现场核查确认"}, {"response", answer(1, 0.88)}},
      {{"contains", "专项资金建设##"}, {"response", answer(1, 0.92)}},
      {{"contains", "##改造并通过验收"}, {"response", answer(1, 0.93)}},
      {{"contains", "始终倡导##"}, {"response", answer(0, 0.9)}},
      {{"contains", "积极践行##"}, {"response", answer(0, 0.91)}},
  });
  return {{"responses", responses}, {"rules", rules}, {"default", {{"judgment", 0}, {"confidence", 0.62}}}};
}

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Greenwashing coefficient whose sample AME at the given linear
/// predictors equals `target`, by bisection.
inline double calibrate_beta(const std::vector<double>& eta, double target) {
  auto ame = [&](double b) {
    double s = 0.0;
    for (double e : eta) s += logistic(e + b) - logistic(e);
    return s / static_cast<double>(eta.size());
  };
  double lo = 0.0, hi = 5.0;
  if (ame(hi) < target) throw Error(ErrorCode::InvalidConfig, "target AME is out of reach");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ame(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string firm_name(std::size_t f) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "F%04zu", f + 1);
  return buf;
}

inline nlohmann::json fixture_config(const Options& o, std::size_t words_n, std::size_t pairs_n, bool validation,
                                     bool txt_reports) {
  using J = nlohmann::json;
  const std::vector<std::string> controls{"size", "lev", "roa"};
  J logit{{"name", "logit_fe"}, {"dependent", "vio"}, {"regressors", J::array({"greenwashing", "size", "lev", "roa"})},
          {"fixed_effects", J::array({"year", "industry"})}, {"family", "logit"}};
  J probit = logit;
  probit["name"] = "probit_fe";
  probit["family"] = "probit";
  J poisson{{"name", "poisson_fe"}, {"dependent", "vio_num"}, {"regressors", J::array({"greenwashing", "size", "lev", "roa"})},
            {"fixed_effects", J::array({"year", "industry"})}, {"family", "poisson"}};
  J cfg{{"corpus_id", "synthetic-" + std::to_string(o.firms) + "x" + std::to_string(o.years)},
        {"reports", txt_reports ? "reports" : "reports.jsonl"},
        {"meta", "meta.csv"},
        {"stopwords", "stopwords.txt"},
        {"segmenter_dictionary", "segmenter.txt"},
        {"templates", {{"layer_a", "templates/layer_a.json"}, {"layer_b", "templates/layer_b.json"}}},
        {"backends", J::array({{{"backend_id", "mock"}, {"kind", "mock"}, {"fixture", "mock.json"}, {"max_inflight", 8}, {"max_retries", 2}},
                               {{"backend_id", "mock-lite"}, {"kind", "mock"}, {"fixture", "mock_lite.json"}, {"max_inflight", 8}, {"max_retries", 2}}})},
        {"champion", "mock"},
        {"layer_b", {{"arm", "control"}, {"context_window_sentences", 2},
                     {"retrieval", {{"provider_id", "snapshot"}, {"snapshot", "retrieval_snapshot.json"}, {"max_passages", 3}}}}},
        {"indicators", {{"esg", "esg.csv"}, {"grouping", "industry_year"}, {"arm", "control"}}},
        {"panel", "panel.csv"},
        {"models", J::array({logit, probit, poisson})},
        {"ame", J::array({{{"model", "logit_fe"}, {"regressor", "greenwashing"}}, {{"model", "probit_fe"}, {"regressor", "greenwashing"}}})},
        {"iv", J::array({{{"name", "peer"}, {"dependent", "vio"}, {"endogenous", "greenwashing"}, {"instrument", "gw_peer"},
                          {"controls", controls}, {"fixed_effects", J::array({"year"})}}})},
        {"psm", J::array({{{"name", "nn"}, {"treatment", "greenwashing"}, {"covariates", controls}, {"outcome_model", "logit_fe"}}})},
        {"moderation", J::array({{{"model", "logit_fe"}, {"moderator", "esg_investor"}}})},
        {"heterogeneity", J::array({{{"model", "logit_fe"}, {"split", "soe"}, {"labels", {{"0", "Non-SOE"}, {"1", "SOE"}}}}})},
        {"placebo", {{"model", "logit_fe"}, {"replications", o.placebo_replications}, {"mode", "permute"}}},
        {"seed", o.seed},
        {"output", "out"}};
  if (validation) {
    cfg["validation"] = {{"word_labels", "word_labels.csv"},
                         {"pair_labels", "pair_labels.csv"},
                         {"layer_a_plan", {{"n_per_replicate", std::min<std::size_t>(100, words_n * 3 / 4)}, {"replicates", 10}}},
                         {"layer_b_plan", {{"n_per_replicate", std::min<std::size_t>(500, pairs_n)}, {"replicates", 1}}},
                         {"arms", J::array({"control", "rag", "context"})}};
  }
  return cfg;
}

/// Writes a complete fixture (reports, metadata, ESG, panel, resources,
/// mock fixtures, labels, config.json, design.csv) into `dir`.
inline Result generate(const Options& o, const fs::path& dir) {
  if (o.firms < 3 || o.years < 1) throw Error(ErrorCode::InvalidConfig, "need at least 3 firms and 1 year");
  const bool validation = o.validation.value_or(o.firms * static_cast<std::size_t>(o.years) <= 2000);
  const bool txt_reports = o.firms * static_cast<std::size_t>(o.years) <= 500;
  Rng rng(o.seed);
  Result out;

  // the last two firms are a financial firm and an ST firm
  std::string meta = csv::format_row({"firm_id", "year", "industry_code", "status_labels", "is_financial", "listing_year"});
  std::vector<nlohmann::json> reports_jsonl;
  if (txt_reports) fs::remove_all(dir / "reports");
  auto write_report = [&](const std::string& firm, int year, const std::string& text) {
    if (txt_reports) io::write_file(dir / "reports" / (firm + "_" + std::to_string(year) + ".txt"), text);
    else reports_jsonl.push_back({{"firm_id", firm}, {"year", year}, {"text", text}});
  };

  const auto& kws = green_keywords();
  for (std::size_t f = 0; f < o.firms; ++f) {
    const auto firm = firm_name(f);
    const bool financial = f == o.firms - 2, st = f == o.firms - 1;
    const std::string industry = financial ? "J66" : industries()[f % industries().size()];
    meta += csv::format_row({firm, "", industry, st ? "ST" : "", financial ? "1" : "0", std::to_string(2000 + static_cast<int>(f % 15))});
    const double p_sub = 0.2 + 0.6 * rng.uniform();
    const double size_f = rng.normal(22.0, 1.0);
    const int soe = rng.bernoulli(0.4) ? 1 : 0;
    const double esg_f = rng.normal(0.0, 6.0);
    for (int t = 0; t < o.years; ++t) {
      const int year = o.first_year + t;
      FirmYearDesign d;
      d.firm_id = firm;
      d.year = year;
      d.industry = industry;
      std::vector<std::pair<Kind, std::string>> plan;
      const int green = 1 + static_cast<int>(rng.poisson(o.mean_green_sentences));
      for (int g = 0; g < green; ++g) {
        const auto& kw = kws[rng.below(kws.size())];
        Kind k = Kind::Symbolic;
        if (rng.bernoulli(p_sub)) k = rng.bernoulli(0.15) ? Kind::Missed : Kind::Substantive;
        (k == Kind::Substantive ? d.substantive : k == Kind::Symbolic ? d.symbolic : d.missed)++;
        plan.emplace_back(k, kw);
      }
      if (rng.bernoulli(0.5)) plan.emplace_back(rng.bernoulli(0.5) ? Kind::Substantive : Kind::Symbolic, missed_keyword());
      const int neutral = 2 + static_cast<int>(rng.below(3));
      for (int i = 0; i < neutral; ++i) plan.emplace_back(Kind::Neutral, "");
      rng.shuffle(plan);

      std::string body;
      for (const auto& [k, kw] : plan) body += sentence(k, kw, rng.below(1000));
      std::string text = firm + "公司" + std::to_string(year) + "年年度报告\n第四节 经营情况讨论与分析\n公司主营业务稳定增长。\n"
                         "第五节 环境保护\n一、重大环境信息\n" + body + "\n二、社会责任工作情况\n公司积极参与社区公益活动。\n第六节 重要事项\n无。\n";
      write_report(firm, year, text);
      if (financial || st) continue;

      d.x = d.substantive;
      d.y = d.symbolic + d.missed;
      const double share = static_cast<double>(d.substantive + d.missed) / static_cast<double>(green);
      if (!rng.bernoulli(o.esg_missing)) d.esg_e = std::stod(num(55.0 + 12.0 * (share - 0.5) + esg_f + rng.normal(0.0, 6.0)));  // as written
      d.soe = soe;
      d.size = size_f + rng.normal(0.0, 0.3);
      d.lev = 0.1 + 0.7 * rng.uniform();
      d.roa = rng.normal(0.04, 0.05);
      d.esg_investor = rng.bernoulli(0.3) ? 1 : 0;
      out.rows.push_back(std::move(d));
    }
  }

  // flags exactly as the indicator stage computes them
  std::vector<indicators::FirmYearIndicator> ind;
  for (const auto& d : out.rows) {
    indicators::FirmYearIndicator r;
    r.firm_id = d.firm_id;
    r.year = d.year;
    r.industry_code = d.industry;
    r.x = d.x;
    r.y = d.y;
    r.esg_e = d.esg_e;
    ind.push_back(r);
  }
  indicators::apply_flags(ind, indicators::Grouping::IndustryYear);
  for (std::size_t i = 0; i < ind.size(); ++i) out.rows[i].greenwashing = ind[i].greenwashing;

  // outcome: logit with year and industry effects
  std::vector<double> eta;
  for (const auto& d : out.rows) {
    const double year_fx = 0.15 * static_cast<double>((d.year - o.first_year) % 3) - 0.1;
    const double ind_fx = d.industry == "C26" ? 0.3 : d.industry == "C39" ? -0.2 : d.industry == "D44" ? 0.1 : 0.0;
    eta.push_back(-1.0 + 0.3 * (d.size - 22.0) + 0.4 * d.lev - 2.0 * d.roa + year_fx + ind_fx);
  }
  out.beta = calibrate_beta(eta, o.target_ame);
  double ame = 0.0;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    auto& d = out.rows[i];
    ame += logistic(eta[i] + out.beta) - logistic(eta[i]);
    d.vio = rng.bernoulli(logistic(eta[i] + out.beta * d.greenwashing)) ? 1 : 0;
    d.vio_num = d.vio ? 1 + static_cast<int>(rng.poisson(0.3 + 0.4 * d.greenwashing)) : 0;
    d.gw_peer = 0.8 * d.greenwashing + rng.normal(0.0, 0.5);
  }
  out.designed_ame = ame / static_cast<double>(out.rows.size());

  // tables
  std::string esg = csv::format_row({"firm_id", "year", "esg_e"});
  std::string panel = csv::format_row({"firm_id", "year", "industry_code", "vio", "vio_num", "size", "lev", "roa", "soe",
                                       "esg_investor", "gw_peer"});
  std::string design = csv::format_row({"firm_id", "year", "industry_code", "substantive", "symbolic", "missed", "x", "y",
                                        "esg_e", "greenwashing"});
  for (const auto& d : out.rows) {
    const auto y = std::to_string(d.year);
    const std::string e = d.esg_e ? num(*d.esg_e) : "";
    esg += csv::format_row({d.firm_id, y, e});
    panel += csv::format_row({d.firm_id, y, d.industry, std::to_string(d.vio), std::to_string(d.vio_num), num(d.size),
                              num(d.lev), num(d.roa), std::to_string(d.soe), std::to_string(d.esg_investor), num(d.gw_peer)});
    design += csv::format_row({d.firm_id, y, d.industry, std::to_string(d.substantive), std::to_string(d.symbolic),
                               std::to_string(d.missed), std::to_string(d.x), std::to_string(d.y), e,
                               std::to_string(d.greenwashing)});
  }
  if (!txt_reports) io::write_file(dir / "reports.jsonl", io::to_jsonl(reports_jsonl));
  io::write_file(dir / "meta.csv", meta);
  io::write_file(dir / "esg.csv", esg);
  io::write_file(dir / "panel.csv", panel);
  io::write_file(dir / "design.csv", design);

  std::vector<std::string> seg = green_keywords();
  seg.push_back(missed_keyword());
  for (const auto& w : neutral_words()) seg.push_back(w);
  std::string seg_text, stop_text;
  for (const auto& w : seg) seg_text += w + "\n";
  for (const auto& w : stopwords()) stop_text += w + "\n";
  io::write_file(dir / "segmenter.txt", seg_text);
  io::write_file(dir / "stopwords.txt", stop_text);
  for (const char* t : {"layer_a.json", "layer_b.json"}) io::write_file(dir / "templates" / t, io::read_file(o.templates / t));

  auto mock = mock_fixture(false);
  io::write_file(dir / "mock_lite.json", mock_fixture(true).dump(2) + "\n");

  // pairs as the pipeline will see them, for labels, retrieval evidence
  // and the corrupted context-arm answers
  segment::TextAnalyzer analyzer;
  analyzer.dictionary = std::make_shared<segment::SegmenterDictionary>(seg, "synthetic");
  analyzer.stopwords = std::make_shared<segment::StopwordList>(stopwords(), "synthetic");
  std::vector<corpus::EnvSection> sections;
  {
    const corpus::MetaIndex mi(corpus::load_meta(dir / "meta.csv"));
    for (const auto& doc : corpus::load_reports(txt_reports ? dir / "reports" : dir / "reports.jsonl")) {
      const auto* m = mi.find(doc.firm_id, doc.year);
      if (m && corpus::filter_universe(*m))
        sections.push_back(corpus::extract_env_section(doc, corpus::SectionPatternSet::defaults(), analyzer));
    }
  }
  GreenDictionary dictionary;
  for (const auto& w : green_keywords()) dictionary.add(GreenEntry{w, 0.95, "mock"});
  const auto pairs = segment::build_s2(sections, dictionary, analyzer);
  out.pairs = pairs.size();

  // RAG evidence for missed sentences on the first half of the keywords
  std::map<std::string, std::vector<std::string>> snapshot;
  const std::set<std::string> evidenced(kws.begin(), kws.begin() + static_cast<std::ptrdiff_t>(kws.size() / 2));
  for (const auto& p : pairs)
    if (p.sentence.find("设备已投入运行") != std::string::npos && evidenced.contains(p.keyword))
      snapshot[p.plain_sentence()] = {kEvidence};
  io::write_file(dir / "retrieval_snapshot.json", nlohmann::json(snapshot).dump(2) + "\n");

  std::size_t words_n = 0;
  if (validation) {
    std::string wl = csv::format_row({"word", "annotator_id", "label"});
    const auto s1 = segment::build_s1(sections, analyzer);
    std::set<std::string> green(kws.begin(), kws.end());
    green.insert(missed_keyword());
    std::set<std::string> known(seg.begin(), seg.end());
    for (const auto& w : s1.words) {
      if (!known.contains(w)) continue;
      wl += csv::format_row({w, "a1", green.contains(w) ? "1" : "0"});
      ++words_n;
    }
    io::write_file(dir / "word_labels.csv", wl);

    std::string pl = csv::format_row({"pair_id", "annotator_id", "label"});
    for (const auto& p : pairs) pl += csv::format_row({p.pair_id, "a1", std::to_string(true_label(p.sentence))});
    io::write_file(dir / "pair_labels.csv", pl);

    // the context arm turns 10% of the high-confidence verdicts wrong
    const auto tpl = llm::PromptTemplate::load(o.templates / "layer_b.json");
    const segment::ContextIndex context(sections, analyzer);
    judge::LayerBOptions lo;
    lo.context = &context;
    const judge::AblationArm arm{judge::Arm::ExtendedContext, 2, {}};
    Rng flip(derive_seed(o.seed, 99));
    for (const auto& p : pairs) {
      if (p.sentence.find("设备已投入运行") != std::string::npos || !flip.bernoulli(0.1)) continue;
      const auto item = judge::layer_b_item(p, arm, tpl, lo);
      mock["responses"][hash_hex(item.prompt)] = answer(1 - true_label(p.sentence), 0.93);
      ++out.flipped;
    }
  }
  io::write_file(dir / "mock.json", mock.dump(2) + "\n");
  io::write_file(dir / "config.json", fixture_config(o, words_n, pairs.size(), validation, txt_reports).dump(2) + "\n");
  return out;
}

}  // namespace deepgreen::synthetic
