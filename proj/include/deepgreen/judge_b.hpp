#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/prompt.hpp"
#include "deepgreen/llm/retrieval.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/validate.hpp"

namespace deepgreen::judge {

enum class Arm { Control, RAG, ExtendedContext };

inline const char* to_string(Arm a) {
  switch (a) {
    case Arm::Control: return "control";
    case Arm::RAG: return "rag";
    case Arm::ExtendedContext: return "context";
  }
  return "?";
}

inline Arm parse_arm(const std::string& s) {
  if (s == "control") return Arm::Control;
  if (s == "rag") return Arm::RAG;
  if (s == "context" || s == "extended_context") return Arm::ExtendedContext;
  throw Error(ErrorCode::InvalidConfig, "unknown ablation arm '" + s + "' (control, rag, context)");
}

struct AblationArm {
  Arm arm = Arm::Control;
  std::size_t context_window_sentences = 2;
  llm::RetrievalConfig retrieval;
};

/// judgment 1 = substantive, 0 = symbolic.
struct PairVerdict {
  std::string pair_id;
  std::string firm_id;
  int year = 0;
  std::string keyword;
  int judgment = 0;
  double confidence = 0.0;
  Arm arm = Arm::Control;
  std::string backend_id;
};

inline void to_json(nlohmann::json& j, const PairVerdict& v) {
  j = nlohmann::json{{"pair_id", v.pair_id},       {"firm_id", v.firm_id},       {"year", v.year},
                     {"keyword", v.keyword},       {"judgment", v.judgment},     {"confidence", v.confidence},
                     {"arm", to_string(v.arm)},    {"backend_id", v.backend_id}};
}

inline void from_json(const nlohmann::json& j, PairVerdict& v) {
  j.at("pair_id").get_to(v.pair_id);
  j.at("firm_id").get_to(v.firm_id);
  j.at("year").get_to(v.year);
  v.keyword = j.value("keyword", std::string{});
  j.at("judgment").get_to(v.judgment);
  j.at("confidence").get_to(v.confidence);
  v.arm = parse_arm(j.at("arm").get<std::string>());
  v.backend_id = j.value("backend_id", std::string{});
}

struct PairFailure {
  std::string pair_id;
  int attempts = 0;
  std::string reason;
};

struct LayerBResult {
  std::vector<PairVerdict> verdicts;
  std::vector<PairFailure> failures;
  std::vector<llm::JournalEntry> journal;
};

struct LayerBOptions {
  int max_inflight = 100;
  int max_retries = 3;
  const segment::ContextIndex* context = nullptr;  // required for ExtendedContext
  llm::Retriever* retriever = nullptr;             // required for RAG
};

/// Prompt payload for one pair under an arm: neighbours for the extended
/// context arm, retrieved passages for the RAG arm, the bare pair otherwise.
inline llm::BatchItem layer_b_item(const segment::KeywordContextPair& pair, const AblationArm& arm,
                                   const llm::PromptTemplate& tpl, const LayerBOptions& opts) {
  llm::PairPayload payload{pair, {}, {}};
  std::vector<std::string> evidence;
  if (arm.arm == Arm::ExtendedContext) {
    if (!opts.context) throw Error(ErrorCode::InvalidConfig, "extended-context arm needs the section sentences");
    std::tie(payload.context_before, payload.context_after) = opts.context->neighbors(pair, arm.context_window_sentences);
  } else if (arm.arm == Arm::RAG) {
    if (!opts.retriever) throw Error(ErrorCode::InvalidConfig, "RAG arm needs a retriever");
    evidence = opts.retriever->retrieve(pair.plain_sentence(), arm.retrieval.max_passages);
  }
  std::string match = pair.keyword + "\n";
  for (const auto& s : payload.context_before) match += s;
  match += pair.sentence;
  for (const auto& s : payload.context_after) match += s;
  for (const auto& e : evidence) match += "\n" + e;
  return {pair.pair_id, match, llm::render_prompt(tpl, payload, evidence)};
}

/// One verdict per successfully judged pair; failed pairs are listed
/// separately and never counted.
inline LayerBResult run_layer_b(const std::vector<segment::KeywordContextPair>& pairs, const AblationArm& arm,
                                llm::Backend& backend, const llm::PromptTemplate& tpl, const LayerBOptions& opts = {}) {
  if (tpl.layer != llm::Layer::B)
    throw Error(ErrorCode::PayloadMismatch, "Layer B needs a Layer B template, got '" + tpl.template_id + "'");
  std::vector<llm::BatchItem> items;
  items.reserve(pairs.size());
  for (const auto& p : pairs) items.push_back(layer_b_item(p, arm, tpl, opts));
  auto batch = llm::batch_submit(items, backend, opts.max_inflight, opts.max_retries);

  LayerBResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& r = batch.results[i];
    const auto& p = pairs[i];
    if (!r.ok()) {
      out.failures.push_back({p.pair_id, r.attempts, r.failure});
      continue;
    }
    out.verdicts.push_back(PairVerdict{p.pair_id, p.firm_id, p.year, p.keyword, r.response->judgment,
                                       r.response->confidence, arm.arm, r.response->backend_id});
  }
  out.journal = std::move(batch.journal);
  return out;
}

struct XYCount {
  std::string firm_id;
  int year = 0;
  long x = 0;  // substantive
  long y = 0;  // symbolic

  friend bool operator==(const XYCount&, const XYCount&) = default;
};

/// X and Y per firm-year. Firm-years listed in `universe` without verdicts
/// come out as (0, 0). All verdicts must come from one arm.
inline std::vector<XYCount> count_xy(const std::vector<PairVerdict>& verdicts,
                                     const std::vector<std::pair<std::string, int>>& universe = {}) {
  std::map<std::pair<std::string, int>, XYCount> groups;
  for (const auto& fy : universe) groups.try_emplace(fy, XYCount{fy.first, fy.second});
  std::set<std::string> seen;
  for (const auto& v : verdicts) {
    if (!seen.insert(v.pair_id).second) throw Error(ErrorCode::DuplicatePair, "pair " + v.pair_id + " judged twice");
    if (v.arm != verdicts.front().arm) throw Error(ErrorCode::ArmMismatch, "verdicts from several ablation arms");
    auto& g = groups.try_emplace({v.firm_id, v.year}, XYCount{v.firm_id, v.year}).first->second;
    (v.judgment == 1 ? g.x : g.y)++;
  }
  std::vector<XYCount> out;
  for (auto& [_, c] : groups) out.push_back(c);
  return out;
}

inline std::string xy_csv(const std::vector<XYCount>& counts) {
  std::string out = "firm_id,year,x,y\n";
  for (const auto& c : counts)
    out += csv::format_row({c.firm_id, std::to_string(c.year), std::to_string(c.x), std::to_string(c.y)});
  return out;
}

inline std::vector<XYCount> load_xy(const std::filesystem::path& path) {
  const auto t = csv::Table::read(path.string());
  std::vector<XYCount> out;
  for (std::size_t r = 0; r < t.size(); ++r)
    out.push_back({t.at(r, "firm_id"), std::stoi(t.at(r, "year")), std::stol(t.at(r, "x")), std::stol(t.at(r, "y"))});
  return out;
}

// --- ablation report -------------------------------------------------------

/// True when the marked keyword sits inside 《…》 book-title marks (the
/// "document" category). Diagnostic only; never used to route judgments.
inline bool in_book_title(const std::string& marked_sentence) {
  const auto start = marked_sentence.find("##");
  if (start == std::string::npos) return false;
  const auto stop = marked_sentence.find("##", start + 2);
  if (stop == std::string::npos) return false;
  const std::string keyword = marked_sentence.substr(start + 2, stop - start - 2);
  if (keyword.rfind("《", 0) == 0) return true;
  const auto open = marked_sentence.rfind("《", start);
  const auto close_before = marked_sentence.rfind("》", start);
  if (open == std::string::npos || (close_before != std::string::npos && close_before > open)) return false;
  const auto close = marked_sentence.find("》", stop);
  const auto open_after = marked_sentence.find("《", stop);
  return close != std::string::npos && (open_after == std::string::npos || close < open_after);
}

struct ConfidenceBucket {
  double lo = 0.0;
  double hi = 0.0;  // exclusive, except the last bucket which is closed
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

inline std::vector<double> default_bucket_edges() { return {0.0, 0.5, 0.7, 0.85, 0.95, 1.0}; }

struct ArmReport {
  Arm arm = Arm::Control;
  validate::Metrics metrics;
  stats::Histogram confidence_density;
  std::vector<ConfidenceBucket> buckets;
  std::size_t book_title_pairs = 0;
  std::size_t other_pairs = 0;
};

struct AblationReport {
  std::vector<ArmReport> arms;

  const ArmReport& arm(Arm a) const {
    for (const auto& r : arms)
      if (r.arm == a) return r;
    throw Error(ErrorCode::MissingArtifact, std::string("no report for arm ") + to_string(a));
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& r : arms) {
      auto buckets = nlohmann::json::array();
      for (const auto& b : r.buckets)
        buckets.push_back({{"lo", b.lo}, {"hi", b.hi}, {"n", b.n}, {"correct", b.correct}, {"accuracy", b.accuracy()}});
      j[to_string(r.arm)] = {{"metrics", validate::to_json(r.metrics)},
                             {"confidence_density", validate::to_json(r.confidence_density)},
                             {"buckets", buckets},
                             {"composition", {{"book_title", r.book_title_pairs}, {"other", r.other_pairs}}}};
    }
    return j;
  }

  std::string metrics_csv() const {
    std::string out = "arm,acc,f1,mcc,tp,fn,fp,tn\n";
    char buf[256];
    for (const auto& r : arms) {
      const auto& m = r.metrics;
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%llu,%llu,%llu,%llu\n", to_string(r.arm), m.acc, m.f1, m.mcc,
                    static_cast<unsigned long long>(m.counts.tp), static_cast<unsigned long long>(m.counts.fn),
                    static_cast<unsigned long long>(m.counts.fp), static_cast<unsigned long long>(m.counts.tn));
      out += buf;
    }
    return out;
  }

  std::string buckets_csv() const {
    std::string out = "arm,lo,hi,n,correct,accuracy\n";
    char buf[256];
    for (const auto& r : arms)
      for (const auto& b : r.buckets) {
        std::snprintf(buf, sizeof(buf), "%s,%.2f,%.2f,%zu,%zu,%.6f\n", to_string(r.arm), b.lo, b.hi, b.n, b.correct,
                      b.accuracy());
        out += buf;
      }
    return out;
  }
};

struct ArmVerdicts {
  Arm arm = Arm::Control;
  std::vector<PairVerdict> verdicts;
  std::map<std::string, std::string> sentences;  // pair_id -> marked sentence, for the composition tally
};

inline AblationReport ablation_report(const std::vector<ArmVerdicts>& arms, const validate::LabelSet& labels,
                                      const std::vector<double>& bucket_edges = default_bucket_edges()) {
  AblationReport report;
  for (const auto& av : arms) {
    ArmReport r;
    r.arm = av.arm;
    for (std::size_t b = 0; b + 1 < bucket_edges.size(); ++b) r.buckets.push_back({bucket_edges[b], bucket_edges[b + 1]});
    std::vector<int> predicted, actual;
    std::vector<double> conf;
    for (const auto& v : av.verdicts) {
      if (v.arm != av.arm) throw Error(ErrorCode::ArmMismatch, "verdict " + v.pair_id + " filed under the wrong arm");
      const int label = labels.at(v.pair_id);
      predicted.push_back(v.judgment);
      actual.push_back(label);
      conf.push_back(v.confidence);
      std::size_t b = 0;
      while (b + 1 < r.buckets.size() && v.confidence >= r.buckets[b].hi) ++b;
      ++r.buckets[b].n;
      if (v.judgment == label) ++r.buckets[b].correct;
      if (auto it = av.sentences.find(v.pair_id); it != av.sentences.end() && in_book_title(it->second))
        ++r.book_title_pairs;
      else
        ++r.other_pairs;
    }
    if (predicted.empty()) throw Error(ErrorCode::MissingLabels, std::string("no verdicts for arm ") + to_string(av.arm));
    r.metrics = validate::metrics(validate::confusion(predicted, actual));
    r.confidence_density = validate::confidence_density(conf);
    report.arms.push_back(std::move(r));
  }
  return report;
}

}  // namespace deepgreen::judge
