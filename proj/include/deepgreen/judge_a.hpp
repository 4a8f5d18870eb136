#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/dictionary.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/prompt.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/util/stats.hpp"
#include "deepgreen/validate.hpp"

namespace deepgreen::judge {

enum class WordStatus { accepted, rejected, failed };

inline const char* to_string(WordStatus s) {
  switch (s) {
    case WordStatus::accepted: return "accepted";
    case WordStatus::rejected: return "rejected";
    case WordStatus::failed: return "failed";
  }
  return "?";
}

struct WordJudgment {
  std::string word;
  WordStatus status = WordStatus::failed;
  std::optional<llm::JudgmentResponse> response;
  int attempts = 0;
  std::string failure;
};

struct LayerAResult {
  GreenDictionary dictionary;
  std::vector<WordJudgment> log;  // one per S1 word, in S1 order
  std::vector<llm::JournalEntry> journal;

  std::size_t count(WordStatus s) const {
    return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [&](const auto& w) { return w.status == s; }));
  }

  std::string log_jsonl() const {
    std::string out;
    for (const auto& w : log) {
      nlohmann::json j{{"word", w.word}, {"status", to_string(w.status)}, {"attempts", w.attempts}};
      if (w.response) {
        j["judgment"] = w.response->judgment;
        j["confidence"] = w.response->confidence;
        j["backend_id"] = w.response->backend_id;
      }
      if (!w.failure.empty() && w.status == WordStatus::failed) j["failure"] = w.failure;
      out += j.dump();
      out.push_back('\n');
    }
    return out;
  }
};

inline std::vector<llm::BatchItem> layer_a_items(const std::vector<std::string>& words, const llm::PromptTemplate& tpl) {
  std::vector<llm::BatchItem> items;
  items.reserve(words.size());
  for (const auto& w : words) items.push_back({w, w, llm::render_prompt(tpl, llm::WordPayload{w})});
  return items;
}

/// Judges every S1 word once. Words judged 1 form the dictionary; rejected
/// and failed words stay in the log only.
inline LayerAResult run_layer_a(const segment::UniqueWordSequence& s1, llm::Backend& backend,
                                const llm::PromptTemplate& tpl, int max_inflight = 100, int max_retries = 3) {
  if (tpl.layer != llm::Layer::A)
    throw Error(ErrorCode::PayloadMismatch, "Layer A needs a Layer A template, got '" + tpl.template_id + "'");
  auto batch = llm::batch_submit(layer_a_items(s1.words, tpl), backend, max_inflight, max_retries);

  LayerAResult out;
  out.dictionary.template_id = tpl.template_id;
  for (std::size_t i = 0; i < s1.words.size(); ++i) {
    auto& r = batch.results[i];
    WordJudgment w;
    w.word = s1.words[i];
    w.attempts = r.attempts;
    w.failure = r.failure;
    if (r.ok()) {
      w.status = r.response->judgment == 1 ? WordStatus::accepted : WordStatus::rejected;
      if (w.status == WordStatus::accepted)
        out.dictionary.add(GreenEntry{w.word, r.response->confidence, r.response->backend_id});
      w.response = std::move(r.response);
    }
    out.log.push_back(std::move(w));
  }
  out.journal = std::move(batch.journal);
  return out;
}

// --- backend comparison ----------------------------------------------------

struct BackendEvaluation {
  std::string backend_id;
  validate::ReplicateSummary metrics;
  stats::Histogram confidence_density;
  double confidence_mean = 0.0;
  double confidence_sd = 0.0;
  double peak_density = 0.0;
  std::size_t failed = 0;
  std::vector<llm::JournalEntry> journal;
};

/// Backends are ranked by MCC mean (desc), MCC dispersion (asc) and
/// confidence spread (asc). The ranking is advisory; the champion is chosen
/// in configuration.
struct ModelComparisonReport {
  std::vector<BackendEvaluation> backends;
  std::vector<std::string> ranking;

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& b : backends) {
      j["backends"][b.backend_id] = {{"metrics", validate::to_json(b.metrics)},
                                     {"confidence", {{"mean", b.confidence_mean},
                                                     {"sd", b.confidence_sd},
                                                     {"peak_density", b.peak_density},
                                                     {"histogram", validate::to_json(b.confidence_density)}}},
                                     {"failed", b.failed}};
    }
    j["ranking"] = ranking;
    return j;
  }
};

struct BackendUnderTest {
  llm::Backend* backend = nullptr;
  int max_inflight = 100;
  int max_retries = 3;
};

inline ModelComparisonReport compare_backends(const std::vector<std::vector<std::string>>& replicates,
                                              const validate::LabelSet& labels,
                                              const std::vector<BackendUnderTest>& backends,
                                              const llm::PromptTemplate& tpl) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  for (const auto& rep : replicates)
    for (const auto& w : rep) {
      if (!labels.has(w)) throw Error(ErrorCode::MissingLabels, "no human label for sampled word '" + w + "'");
      if (seen.insert(w).second) words.push_back(w);
    }
  if (words.empty()) throw Error(ErrorCode::MissingLabels, "empty word sample");

  ModelComparisonReport report;
  for (const auto& but : backends) {
    auto batch = llm::batch_submit(layer_a_items(words, tpl), *but.backend, but.max_inflight, but.max_retries);
    std::map<std::string, const llm::JudgmentResponse*> by_word;
    std::vector<double> confidences;
    for (const auto& r : batch.results)
      if (r.ok()) {
        by_word[r.item_key] = &*r.response;
        confidences.push_back(r.response->confidence);
      }

    BackendEvaluation eval;
    eval.backend_id = but.backend->id();
    eval.failed = batch.failed;
    std::vector<validate::Metrics> reps;
    for (const auto& rep : replicates) {
      std::vector<int> predicted, actual;
      for (const auto& w : rep) {
        auto it = by_word.find(w);
        if (it == by_word.end()) continue;
        predicted.push_back(it->second->judgment);
        actual.push_back(labels.at(w));
      }
      if (predicted.empty()) throw Error(ErrorCode::EmptyConfusion, "every judgment in a replicate failed");
      reps.push_back(validate::metrics(validate::confusion(predicted, actual)));
    }
    eval.metrics = validate::summarize_replicates(std::move(reps));
    if (!confidences.empty()) {
      eval.confidence_density = validate::confidence_density(confidences);
      eval.confidence_mean = stats::mean(confidences);
      eval.confidence_sd = stats::sample_sd(confidences);
      eval.peak_density = *std::max_element(eval.confidence_density.density.begin(), eval.confidence_density.density.end());
    }
    eval.journal = std::move(batch.journal);
    report.backends.push_back(std::move(eval));
  }

  std::vector<const BackendEvaluation*> order;
  for (const auto& b : report.backends) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->metrics.mean.mcc != b->metrics.mean.mcc) return a->metrics.mean.mcc > b->metrics.mean.mcc;
    if (a->metrics.mcc_sd != b->metrics.mcc_sd) return a->metrics.mcc_sd < b->metrics.mcc_sd;
    return a->confidence_sd < b->confidence_sd;
  });
  for (const auto* b : order) report.ranking.push_back(b->backend_id);
  return report;
}

}  // namespace deepgreen::judge
