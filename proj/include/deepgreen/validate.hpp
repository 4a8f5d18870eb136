#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/util/csv.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/random.hpp"
#include "deepgreen/util/stats.hpp"

namespace deepgreen::validate {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fn + fp + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// (tp + tn) / total.
inline double acc(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyConfusion, "accuracy of an empty confusion table");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

/// 2tp / (2tp + fn + fp). With no positives anywhere (tp = fn = fp = 0) the
/// classifier made no positive mistakes and F1 is taken as 1 when tn > 0.
inline double f1(const ConfusionCounts& c) {
  const auto denom = 2 * c.tp + c.fn + c.fp;
  if (denom == 0) {
    if (c.tn > 0) return 1.0;
    throw Error(ErrorCode::EmptyConfusion, "F1 of an empty confusion table");
  }
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

/// Matthews correlation; 0 when any marginal total is zero.
inline double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double a = tp + fp, b = tp + fn, d = tn + fp, e = tn + fn;
  if (a == 0.0 || b == 0.0 || d == 0.0 || e == 0.0) return 0.0;
  // The product of the margins is exact below 2^53 and then needs a single
  // rounding; beyond that the square roots are taken separately.
  const double prod = a * b * d * e;
  if (prod < 0x1p53) return (tp * tn - fp * fn) / std::sqrt(prod);
  return (tp * tn - fp * fn) / (std::sqrt(a) * std::sqrt(b) * std::sqrt(d) * std::sqrt(e));
}

inline ConfusionCounts confusion(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::MissingLabels, "prediction/label length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, a = actual[i] != 0;
    if (p && a) ++c.tp;
    else if (!p && a) ++c.fn;
    else if (p && !a) ++c.fp;
    else ++c.tn;
  }
  return c;
}

struct Metrics {
  double acc = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  ConfusionCounts counts;
};

inline Metrics metrics(const ConfusionCounts& c) { return Metrics{acc(c), f1(c), mcc(c), c}; }

inline nlohmann::json to_json(const Metrics& m) {
  return {{"acc", m.acc},
          {"f1", m.f1},
          {"mcc", m.mcc},
          {"tp", m.counts.tp},
          {"fn", m.counts.fn},
          {"fp", m.counts.fp},
          {"tn", m.counts.tn}};
}

struct SamplingPlan {
  std::size_t n_per_replicate = 100;
  std::size_t replicates = 10;
  std::uint64_t seed = 0;
  std::string population_id;
};

/// Each replicate is an independent uniform draw without replacement,
/// generated by a partial Fisher-Yates shuffle on a per-replicate stream
/// (mt19937_64 seeded with derive_seed(seed, replicate)).
inline std::vector<std::vector<std::size_t>> draw_samples(const SamplingPlan& plan, std::size_t population_size) {
  if (population_size == 0) throw Error(ErrorCode::PlanInfeasible, "empty population");
  if (plan.n_per_replicate > population_size)
    throw Error(ErrorCode::PlanInfeasible, "sample of " + std::to_string(plan.n_per_replicate) + " from population of " +
                                               std::to_string(population_size));
  if (plan.replicates == 0) throw Error(ErrorCode::PlanInfeasible, "zero replicates");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t r = 0; r < plan.replicates; ++r) {
    Rng rng(derive_seed(plan.seed, r));
    std::vector<std::size_t> idx(population_size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < plan.n_per_replicate; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(population_size - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(plan.n_per_replicate);
    out.push_back(std::move(idx));
  }
  return out;
}

/// Normalized histogram of confidences over [0, 1].
inline stats::Histogram confidence_density(const std::vector<double>& values, std::size_t bins = 20) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "confidence density of no values");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, "confidence outside [0,1]");
  return stats::histogram(values, bins, 0.0, 1.0);
}

inline nlohmann::json to_json(const stats::Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}, {"density", h.density}, {"total", h.total}};
}

inline std::string density_csv(const stats::Histogram& h) {
  std::string out = "bin_lo,bin_hi,count,density\n";
  char buf[128];
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%zu,%.6f\n", h.edges[i], h.edges[i + 1], h.counts[i], h.density[i]);
    out += buf;
  }
  return out;
}

// --- human labels --------------------------------------------------------

struct LabelSet {
  std::map<std::string, int> labels;              // adjudicated label per item
  std::map<std::string, std::size_t> annotators;  // annotations per item
  std::vector<std::string> disagreements;         // items whose annotators differed
  std::vector<std::string> ties;                  // split votes, left unlabelled

  bool has(const std::string& item) const { return labels.contains(item); }
  int at(const std::string& item) const {
    auto it = labels.find(item);
    if (it == labels.end()) throw Error(ErrorCode::MissingLabels, "no label for '" + item + "'");
    return it->second;
  }
};

struct Annotation {
  std::string item_id;
  std::string annotator_id;
  int label = 0;
};

/// Majority vote per item; exact ties stay unlabelled and are reported.
inline LabelSet adjudicate(const std::vector<Annotation>& annotations) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // (zeros, ones)
  for (const auto& a : annotations) {
    if (a.label != 0 && a.label != 1) throw Error(ErrorCode::OutOfRange, "label must be 0 or 1 for " + a.item_id);
    auto& v = votes[a.item_id];
    (a.label ? v.second : v.first)++;
  }
  LabelSet set;
  for (const auto& [item, v] : votes) {
    set.annotators[item] = v.first + v.second;
    if (v.first && v.second) set.disagreements.push_back(item);
    if (v.first == v.second) {
      set.ties.push_back(item);
      continue;
    }
    set.labels[item] = v.second > v.first ? 1 : 0;
  }
  return set;
}

/// Label CSV with columns item_id, annotator_id, label; a two-column
/// (item, label) file is read as a single annotator. The item column may
/// also be named "word" or "pair_id".
inline LabelSet load_labels(const std::filesystem::path& path) {
  const auto t = csv::Table::read(path.string());
  std::string item_col = "item_id";
  for (const char* alt : {"item_id", "word", "pair_id"})
    if (t.has(alt)) {
      item_col = alt;
      break;
    }
  std::vector<Annotation> ann;
  for (std::size_t r = 0; r < t.size(); ++r) {
    Annotation a;
    a.item_id = t.at(r, item_col);
    a.annotator_id = t.has("annotator_id") ? t.at(r, "annotator_id") : "a1";
    a.label = std::stoi(t.at(r, "label"));
    ann.push_back(std::move(a));
  }
  return adjudicate(ann);
}

inline nlohmann::json disagreement_report(const LabelSet& set) {
  return {{"items", set.labels.size() + set.ties.size()},
          {"disagreements", set.disagreements.size()},
          {"ties", set.ties},
          {"disagreeing_items", set.disagreements}};
}

/// Mean and sample standard deviation of each metric across replicates.
struct ReplicateSummary {
  std::vector<Metrics> replicates;
  Metrics mean;
  double acc_sd = 0.0, f1_sd = 0.0, mcc_sd = 0.0;
};

inline ReplicateSummary summarize_replicates(std::vector<Metrics> reps) {
  ReplicateSummary s;
  std::vector<double> a, f, m;
  for (const auto& r : reps) {
    a.push_back(r.acc);
    f.push_back(r.f1);
    m.push_back(r.mcc);
    s.mean.counts.tp += r.counts.tp;
    s.mean.counts.fn += r.counts.fn;
    s.mean.counts.fp += r.counts.fp;
    s.mean.counts.tn += r.counts.tn;
  }
  s.mean.acc = stats::mean(a);
  s.mean.f1 = stats::mean(f);
  s.mean.mcc = stats::mean(m);
  s.acc_sd = stats::sample_sd(a);
  s.f1_sd = stats::sample_sd(f);
  s.mcc_sd = stats::sample_sd(m);
  s.replicates = std::move(reps);
  return s;
}

inline nlohmann::json to_json(const ReplicateSummary& s) {
  auto reps = nlohmann::json::array();
  for (const auto& r : s.replicates) reps.push_back(to_json(r));
  return {{"replicates", reps},
          {"mean", {{"acc", s.mean.acc}, {"f1", s.mean.f1}, {"mcc", s.mean.mcc}}},
          {"sd", {{"acc", s.acc_sd}, {"f1", s.f1_sd}, {"mcc", s.mcc_sd}}}};
}

}  // namespace deepgreen::validate
