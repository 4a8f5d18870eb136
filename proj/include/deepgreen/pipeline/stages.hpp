#pragma once

// File-based pipeline stages. Each stage reads its predecessors' artifacts
// from the output directory, writes its own under <out>/<stage>/, and
// records a manifest of input and output hashes.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/corpus.hpp"
#include "deepgreen/dictionary.hpp"
#include "deepgreen/econ.hpp"
#include "deepgreen/indicators.hpp"
#include "deepgreen/judge_a.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/llm/backend.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/http_backend.hpp"
#include "deepgreen/llm/prompt.hpp"
#include "deepgreen/llm/retrieval.hpp"
#include "deepgreen/pipeline/config.hpp"
#include "deepgreen/segment.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/io.hpp"
#include "deepgreen/util/stats.hpp"
#include "deepgreen/validate.hpp"

namespace deepgreen::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  fs::path out;
  std::string backend_id;                 // empty: champion
  std::optional<judge::Arm> arm;          // judge-b arm override
  bool from_journal = false;
  std::optional<int> max_inflight;        // scheduling override, not part of the config identity
};

inline std::string hash_path(const fs::path& p) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += f.lexically_relative(p).generic_string() + '\0' + hash_hex(io::read_file(f)) + '\n';
    return hash_hex(acc);
  }
  return hash_hex(io::read_file(p));
}

/// Collects what a stage read and wrote; written last as manifest.json.
class Stage {
 public:
  Stage(std::string name, const PipelineConfig& cfg, const RunOptions& opt)
      : name_(std::move(name)), cfg_(cfg), opt_(opt), dir_(opt.out / name_) {}

  const fs::path& dir() const { return dir_; }
  fs::path artifact(const std::string& stage, const std::string& rel) const { return opt_.out / stage / rel; }

  /// Inputs under the output directory are keyed relative to it, all
  /// others relative to the config, so manifests do not depend on --out.
  void input(const fs::path& p) {
    const auto rel = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(opt_.out).lexically_normal());
    const bool inside = !rel.empty() && *rel.begin() != "..";
    inputs_[inside ? rel.generic_string() : cfg_.display(p)] = hash_path(p);
  }

  /// A predecessor artifact; MissingArtifact names what is missing and the
  /// stage that produces it.
  fs::path require(const std::string& stage, const std::string& rel, const std::string& what) {
    const auto p = artifact(stage, rel);
    if (!fs::exists(p))
      throw Error(ErrorCode::MissingArtifact, what + " (run '" + stage + "' first; expected " + p.string() + ")");
    inputs_[stage + "/" + rel] = hash_path(p);
    return p;
  }

  void write(const std::string& rel, const std::string& content) {
    io::write_file(dir_ / rel, content);
    outputs_[rel] = hash_hex(content);
  }
  void write_json(const std::string& rel, const nlohmann::json& j) { write(rel, j.dump(2) + "\n"); }

  void set(const std::string& key, nlohmann::json v) { extra_[key] = std::move(v); }

  nlohmann::json manifest() const {
    nlohmann::json j{{"stage", name_},
                     {"version", kVersion},
                     {"corpus_id", cfg_.corpus_id},
                     {"config_hash", cfg_.config_hash},
                     {"seed", cfg_.seed ? nlohmann::json(*cfg_.seed) : nlohmann::json()},
                     {"inputs", inputs_},
                     {"outputs", outputs_}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    return j;
  }

  void finish() { io::write_file(dir_ / "manifest.json", manifest().dump(2) + "\n"); }

 private:
  std::string name_;
  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  fs::path dir_;
  std::map<std::string, std::string> inputs_, outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

namespace detail {

inline segment::TextAnalyzer analyzer(const PipelineConfig& cfg) {
  segment::TextAnalyzer a;
  a.dictionary = std::make_shared<segment::SegmenterDictionary>(segment::SegmenterDictionary::load(cfg.segmenter_dictionary));
  a.stopwords = std::make_shared<segment::StopwordList>(segment::StopwordList::load(cfg.stopwords));
  return a;
}

inline void text_inputs(Stage& s, const PipelineConfig& cfg) {
  s.input(cfg.stopwords);
  s.input(cfg.segmenter_dictionary);
}

inline std::unique_ptr<llm::Backend> make_backend(const llm::BackendConfig& bc) {
  if (bc.kind == llm::BackendKind::mock) return std::make_unique<llm::MockBackend>(llm::MockBackend::load(bc.backend_id, bc.fixture_path));
  return std::make_unique<llm::HttpBackend>(bc);
}

/// Live backend, or a replay of the journal at `journal` with --from-journal.
inline std::unique_ptr<llm::Backend> backend_for(const llm::BackendConfig& bc, const RunOptions& opt, const fs::path& journal,
                                                 Stage& stage) {
  if (opt.from_journal) {
    stage.input(journal);
    return std::make_unique<llm::ReplayBackend>(bc.backend_id, llm::load_journal(journal));
  }
  if (bc.kind == llm::BackendKind::mock) stage.input(bc.fixture_path);
  return make_backend(bc);
}

inline int inflight(const llm::BackendConfig& bc, const RunOptions& opt) { return opt.max_inflight.value_or(bc.max_inflight); }

inline std::vector<corpus::EnvSection> sections(Stage& s) {
  return corpus::load_sections(s.require("ingest", "sections.jsonl", "environmental sections"));
}

inline std::string arm_dir(judge::Arm a) { return std::string("arm_") + judge::to_string(a); }

inline std::string summary_csv(const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
  std::string out = csv::format_row({"variable", "obvs", "mean", "std", "min", "p50", "max", "skew", "kurt"});
  for (const auto& [name, values] : columns) {
    if (values.empty()) {
      out += csv::format_row({name, "0", "", "", "", "", "", "", ""});
      continue;
    }
    const auto s = stats::summarize(values);
    auto f = corpus::format_number;
    out += csv::format_row({name, std::to_string(s.obvs), f(s.mean), f(s.std), f(s.min), f(s.median), f(s.max),
                            f(s.skewness), f(s.kurtosis)});
  }
  return out;
}

}  // namespace detail

// --- ingest ---------------------------------------------------------------

inline void cmd_ingest(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("ingest", cfg, opt);
  s.input(cfg.reports);
  s.input(cfg.meta);
  detail::text_inputs(s, cfg);
  const auto analyzer = detail::analyzer(cfg);
  const auto patterns = cfg.section_patterns.value_or(corpus::SectionPatternSet::defaults());
  const corpus::MetaIndex meta(corpus::load_meta(cfg.meta));

  std::vector<corpus::EnvSection> kept;
  std::size_t documents = 0, excluded = 0, no_meta = 0, empty = 0, ambiguous = 0;
  for (const auto& doc : corpus::load_reports(cfg.reports)) {
    ++documents;
    const auto* m = meta.find(doc.firm_id, doc.year);
    if (!m) {
      ++no_meta;
      continue;
    }
    if (!corpus::filter_universe(*m)) {
      ++excluded;
      continue;
    }
    auto section = corpus::extract_env_section(doc, patterns, analyzer);
    if (section.text.empty()) ++empty;
    if (section.ambiguous) ++ambiguous;
    kept.push_back(std::move(section));
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyInput, "no report survived the universe filter");
  s.write("sections.jsonl", corpus::sections_jsonl(kept));
  s.write("corpus_stats.csv", corpus::stats_csv(corpus::corpus_stats(kept)));
  s.write_json("summary.json", {{"documents", documents},
                                {"sections", kept.size()},
                                {"excluded_by_filter", excluded},
                                {"without_metadata", no_meta},
                                {"empty_sections", empty},
                                {"ambiguous_sections", ambiguous}});
  s.finish();
}

// --- segment --------------------------------------------------------------

inline void cmd_segment(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("segment", cfg, opt);
  const auto sections = detail::sections(s);
  detail::text_inputs(s, cfg);
  const auto s1 = segment::build_s1(sections, detail::analyzer(cfg));
  s.write_json("s1.json", s1.to_json());
  s.set("words", s1.words.size());
  s.finish();
}

// --- judge-a --------------------------------------------------------------

inline void cmd_judge_a(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("judge_a", cfg, opt);
  const auto s1 = segment::UniqueWordSequence::from_json(io::read_json(s.require("segment", "s1.json", "word sequence S1")));
  const auto& bc = cfg.backend(opt.backend_id);
  s.input(cfg.template_a);
  const auto tpl = llm::PromptTemplate::load(cfg.template_a);
  auto backend = detail::backend_for(bc, opt, s.dir() / "journal.jsonl", s);
  auto result = judge::run_layer_a(s1, *backend, tpl, detail::inflight(bc, opt), bc.max_retries);
  result.dictionary.built_from = cfg.corpus_id;
  s.write_json("dictionary.json", result.dictionary.to_json());
  s.write("log.jsonl", result.log_jsonl());
  s.write("journal.jsonl", llm::journal_jsonl(result.journal));
  s.set("backend_id", bc.backend_id);
  s.set("template", {{"id", tpl.template_id}, {"digest", tpl.digest()}});
  s.set("counts", {{"accepted", result.count(judge::WordStatus::accepted)},
                   {"rejected", result.count(judge::WordStatus::rejected)},
                   {"failed", result.count(judge::WordStatus::failed)}});
  s.finish();
}

// --- judge-b --------------------------------------------------------------

inline void cmd_judge_b(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("judge_b", cfg, opt);
  const auto dict_path = s.artifact("judge_a", "dictionary.json");
  const auto dictionary = GreenDictionary::load(dict_path);
  s.input(dict_path);
  const auto sections = detail::sections(s);
  detail::text_inputs(s, cfg);
  const auto analyzer = detail::analyzer(cfg);
  s.input(cfg.template_b);
  const auto tpl = llm::PromptTemplate::load(cfg.template_b);

  judge::AblationArm arm = cfg.arm;
  if (opt.arm) arm.arm = *opt.arm;
  const auto& bc = cfg.backend(opt.backend_id);
  const auto sub = detail::arm_dir(arm.arm) + "/";

  const auto pairs = segment::build_s2(sections, dictionary, analyzer);
  std::vector<nlohmann::json> pair_json;
  for (const auto& p : pairs) pair_json.push_back(p);

  segment::ContextIndex context;
  std::unique_ptr<llm::Retriever> retriever;
  std::shared_ptr<llm::RecordingRetriever> recorder;
  judge::LayerBOptions lo;
  lo.max_inflight = detail::inflight(bc, opt);
  lo.max_retries = bc.max_retries;
  if (arm.arm == judge::Arm::ExtendedContext) {
    context = segment::ContextIndex(sections, analyzer);
    lo.context = &context;
  } else if (arm.arm == judge::Arm::RAG) {
    if (!cfg.retrieval) throw Error(ErrorCode::InvalidConfig, "the rag arm needs layer_b.retrieval in the config");
    if (!cfg.retrieval->snapshot_path.empty() && (opt.from_journal || fs::exists(cfg.retrieval->snapshot_path))) {
      s.input(cfg.retrieval->snapshot_path);
      retriever = std::make_unique<llm::SnapshotRetriever>(llm::SnapshotRetriever::load(cfg.retrieval->snapshot_path));
      lo.retriever = retriever.get();
    } else {
      auto live = std::make_shared<llm::HttpRetriever>(cfg.retrieval->endpoint, "DEEPGREEN_RETRIEVAL_KEY");
      const fs::path snap = cfg.retrieval->snapshot_path.empty() ? s.dir() / sub / "retrieval_snapshot.json"
                                                                 : fs::path(cfg.retrieval->snapshot_path);
      recorder = std::make_shared<llm::RecordingRetriever>(live, snap);
      lo.retriever = recorder.get();
    }
  }

  auto backend = detail::backend_for(bc, opt, s.dir() / sub / "journal.jsonl", s);
  const auto result = judge::run_layer_b(pairs, arm, *backend, tpl, lo);
  if (recorder) recorder->flush();

  std::vector<std::pair<std::string, int>> universe;
  for (const auto& sec : sections) universe.emplace_back(sec.firm_id, sec.year);
  const auto xy = judge::count_xy(result.verdicts, universe);

  std::vector<nlohmann::json> verdicts, failures;
  for (const auto& v : result.verdicts) verdicts.push_back(v);
  for (const auto& f : result.failures) failures.push_back({{"pair_id", f.pair_id}, {"attempts", f.attempts}, {"reason", f.reason}});
  s.write("pairs.jsonl", io::to_jsonl(pair_json));
  s.write(sub + "verdicts.jsonl", io::to_jsonl(verdicts));
  s.write(sub + "failures.jsonl", io::to_jsonl(failures));
  s.write(sub + "xy.csv", judge::xy_csv(xy));
  s.write(sub + "journal.jsonl", llm::journal_jsonl(result.journal));
  s.set("arm", judge::to_string(arm.arm));
  s.set("backend_id", bc.backend_id);
  s.set("template", {{"id", tpl.template_id}, {"digest", tpl.digest()}});
  s.set("pairs", pairs.size());
  s.set("failed", result.failures.size());
  // one manifest per arm so that running several arms keeps each record
  io::write_file(s.dir() / sub / "manifest.json", s.manifest().dump(2) + "\n");
}

// --- indicators -----------------------------------------------------------

inline void cmd_indicators(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("indicators", cfg, opt);
  const auto arm = detail::arm_dir(cfg.indicator_arm);
  const auto xy = judge::load_xy(s.require("judge_b", arm + "/xy.csv", std::string("X/Y counts for arm ") +
                                                                         judge::to_string(cfg.indicator_arm)));
  s.input(cfg.meta);
  s.input(cfg.esg);
  const corpus::MetaIndex meta(corpus::load_meta(cfg.meta));
  const auto rows = indicators::build_indicators(xy, meta, indicators::load_esg(cfg.esg), cfg.grouping);
  auto means = indicators::compute_group_means(rows, cfg.grouping);

  std::string gm = csv::format_row({"industry_code", "year", "n", "gi_mean", "esg_e_mean"});
  char a[32], b[32];
  for (const auto& m : means) {
    std::snprintf(a, sizeof(a), "%.10g", m.gi_mean);
    std::snprintf(b, sizeof(b), "%.10g", m.esg_e_mean);
    gm += csv::format_row({m.key.industry_code, m.key.year ? std::to_string(*m.key.year) : "", std::to_string(m.n), a, b});
  }
  std::vector<double> x, y, gi, esg, flag;
  for (const auto& r : rows) {
    x.push_back(static_cast<double>(r.x));
    y.push_back(static_cast<double>(r.y));
    gi.push_back(r.gi);
    if (r.esg_e) esg.push_back(*r.esg_e);
    flag.push_back(r.greenwashing);
  }
  s.write("indicators.csv", indicators::indicators_csv(rows));
  s.write("group_means.csv", gm);
  s.write("distribution.csv", detail::summary_csv({{"X", x}, {"Y", y}, {"GI", gi}, {"ESG_E", esg}, {"Greenwashing", flag}}));
  s.write_json("gi_histogram.json", validate::to_json(stats::histogram(gi, 10, 0.0, 1.0)));
  s.set("arm", judge::to_string(cfg.indicator_arm));
  s.set("grouping", cfg.grouping == indicators::Grouping::IndustryYear ? "industry_year" : "industry");
  s.finish();
}

// --- validate -------------------------------------------------------------

inline void cmd_validate(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("validate", cfg, opt);
  const auto seed = cfg.require_seed("validation sampling");
  nlohmann::json summary = nlohmann::json::object();

  if (!cfg.word_labels.empty()) {
    const auto s1 = segment::UniqueWordSequence::from_json(io::read_json(s.require("segment", "s1.json", "word sequence S1")));
    s.input(cfg.word_labels);
    s.input(cfg.template_a);
    const auto labels = validate::load_labels(cfg.word_labels);
    std::vector<std::string> population;
    for (const auto& w : s1.words)
      if (labels.has(w)) population.push_back(w);
    validate::SamplingPlan plan{cfg.layer_a_plan.n_per_replicate, cfg.layer_a_plan.replicates, derive_seed(seed, 1), "s1"};
    std::vector<std::vector<std::string>> replicates;
    for (const auto& idx : validate::draw_samples(plan, population.size())) {
      std::vector<std::string> rep;
      for (auto i : idx) rep.push_back(population[i]);
      replicates.push_back(std::move(rep));
    }
    const auto tpl = llm::PromptTemplate::load(cfg.template_a);
    std::vector<std::unique_ptr<llm::Backend>> owned;
    std::vector<judge::BackendUnderTest> under_test;
    for (const auto& bc : cfg.backends) {
      owned.push_back(detail::backend_for(bc, opt, s.dir() / ("journal_" + bc.backend_id + ".jsonl"), s));
      under_test.push_back({owned.back().get(), detail::inflight(bc, opt), bc.max_retries});
    }
    const auto report = judge::compare_backends(replicates, labels, under_test, tpl);
    for (const auto& b : report.backends) s.write("journal_" + b.backend_id + ".jsonl", llm::journal_jsonl(b.journal));
    auto j = report.to_json();
    j["sample"] = replicates;
    j["label_disagreements"] = validate::disagreement_report(labels);
    s.write_json("layer_a.json", j);
    summary["layer_a_ranking"] = report.ranking;
  }

  if (!cfg.pair_labels.empty()) {
    s.input(cfg.pair_labels);
    if (cfg.layer_b_plan.replicates != 1)
      throw Error(ErrorCode::InvalidConfig, "the layer B label sample is a single replicate");
    const auto labels = validate::load_labels(cfg.pair_labels);
    std::map<std::string, std::string> sentences;
    for (const auto& j : io::read_jsonl(s.require("judge_b", "pairs.jsonl", "keyword-context pairs")))
      sentences[j.at("pair_id").get<std::string>()] = j.at("sentence").get<std::string>();

    std::vector<judge::ArmVerdicts> arms;
    for (auto a : cfg.ablation_arms) {
      judge::ArmVerdicts av;
      av.arm = a;
      for (const auto& j : io::read_jsonl(s.require("judge_b", detail::arm_dir(a) + "/verdicts.jsonl",
                                                    std::string("verdicts for arm ") + judge::to_string(a))))
        av.verdicts.push_back(j.get<judge::PairVerdict>());
      arms.push_back(std::move(av));
    }
    // population: labelled pairs judged in every arm, in pair-id order
    std::map<std::string, std::size_t> judged;
    for (const auto& av : arms)
      for (const auto& v : av.verdicts) ++judged[v.pair_id];
    std::vector<std::string> population;
    for (const auto& [id, _] : labels.labels) {
      auto it = judged.find(id);
      if (it != judged.end() && it->second == arms.size() && sentences.contains(id)) population.push_back(id);
    }
    validate::SamplingPlan plan{cfg.layer_b_plan.n_per_replicate, 1, derive_seed(seed, 2), "s2"};
    const auto draws = validate::draw_samples(plan, population.size());
    std::set<std::string> sample;
    for (auto i : draws.front()) sample.insert(population[i]);
    for (auto& av : arms) {
      std::erase_if(av.verdicts, [&](const auto& v) { return !sample.contains(v.pair_id); });
      for (const auto& v : av.verdicts) av.sentences[v.pair_id] = sentences.at(v.pair_id);
    }
    const auto report = judge::ablation_report(arms, labels);
    auto j = report.to_json();
    j["sample"] = std::vector<std::string>(sample.begin(), sample.end());
    s.write_json("ablation.json", j);
    s.write("ablation_metrics.csv", report.metrics_csv());
    s.write("ablation_buckets.csv", report.buckets_csv());
  }
  s.write_json("summary.json", summary);
  s.finish();
}

// --- estimate -------------------------------------------------------------

namespace detail {

/// Panel joined with the indicator columns (x, y, gi, esg_e, greenwashing).
/// Firm-years without an indicator row keep NaN there and drop out of
/// models that use them.
inline econ::Panel merged_panel(const econ::Panel& base, const std::vector<indicators::FirmYearIndicator>& rows) {
  std::map<std::pair<std::string, int>, const indicators::FirmYearIndicator*> by_key;
  for (const auto& r : rows) by_key[{r.firm_id, r.year}] = &r;
  econ::Panel p = base;
  const auto n = p.rows();
  std::vector<double> x(n, econ::kMissing), y(n, econ::kMissing), gi(n, econ::kMissing), esg(n, econ::kMissing),
      gw(n, econ::kMissing);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = by_key.find({p.firm_id[i], p.year[i]});
    if (it == by_key.end()) continue;
    const auto& r = *it->second;
    x[i] = static_cast<double>(r.x);
    y[i] = static_cast<double>(r.y);
    gi[i] = r.gi;
    if (r.esg_e) esg[i] = *r.esg_e;
    gw[i] = r.greenwashing;
  }
  p.set_column("x", std::move(x));
  p.set_column("y", std::move(y));
  p.set_column("gi", std::move(gi));
  p.set_column("esg_e", std::move(esg));
  p.set_column("greenwashing", std::move(gw));
  return p;
}

inline std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return out;
}

}  // namespace detail

inline void cmd_estimate(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("estimate", cfg, opt);
  const auto rows = indicators::load_indicators(s.require("indicators", "indicators.csv", "firm-year indicators"));
  if (cfg.panel.empty()) throw Error(ErrorCode::InvalidConfig, "estimation needs a panel file");
  s.input(cfg.panel);
  const auto panel = detail::merged_panel(econ::Panel::read_csv(cfg.panel), rows);
  s.write("panel.csv", panel.to_csv());

  std::vector<std::pair<std::string, std::vector<double>>> desc;
  std::set<std::string> used;
  for (const auto& m : cfg.models) {
    used.insert(econ::lower(m.dependent));
    for (const auto& r : m.regressors) used.insert(econ::lower(r));
  }
  for (const auto& v : used) {
    if (!panel.has(v)) continue;
    std::vector<double> vals;
    for (double d : panel.column(v))
      if (!econ::is_missing(d)) vals.push_back(d);
    desc.emplace_back(v, std::move(vals));
  }
  s.write("descriptive.csv", detail::summary_csv(desc));

  nlohmann::json summary = nlohmann::json::object();
  std::map<std::string, econ::EstimationResult> fits;
  std::vector<econ::TableColumn> cols;
  for (const auto& m : cfg.models) {
    auto r = econ::estimate(panel, m);
    s.write_json("models/" + detail::file_stem(m.name) + ".json", r.to_json());
    fits.emplace(m.name, std::move(r));
  }
  for (const auto& m : cfg.models) cols.push_back({m.name, &fits.at(m.name)});
  if (!cols.empty()) {
    econ::RegressionTable t(cols);
    s.write("table_models.txt", t.to_text());
    s.write("table_models.csv", t.to_csv());
  }

  auto ame = nlohmann::json::array();
  for (const auto& a : cfg.ame) {
    const auto& spec = cfg.model(a.model);
    const auto d = econ::build_design(panel, spec);
    const auto me = econ::ame_binary(fits.at(a.model), d, a.regressor);
    ame.push_back({{"model", a.model}, {"regressor", me.variable}, {"ame", me.ame}, {"se", me.se}, {"z", me.z()},
                   {"p_value", me.p_value()}, {"n", d.n()}});
  }
  if (!cfg.ame.empty()) s.write_json("ame.json", ame);

  for (const auto& spec : cfg.iv) {
    const auto r = econ::fit_iv(panel, spec);
    const auto stem = "iv_" + detail::file_stem(spec.name);
    s.write_json(stem + ".json", {{"first_stage", r.first_stage.to_json()},
                                  {"two_sls", r.two_sls.to_json()},
                                  {"fiml", r.fiml.to_json()},
                                  {"first_stage_f", r.first_stage_f},
                                  {"weak_instrument", r.weak_instrument}});
    econ::RegressionTable t({{"First stage", &r.first_stage}, {"2SLS", &r.two_sls}, {"FIML", &r.fiml}});
    s.write(stem + ".txt", t.to_text());
  }

  for (const auto& p : cfg.psm) {
    const auto r = econ::psm(panel, p.spec);
    const auto stem = "psm_" + detail::file_stem(p.name);
    s.write_json(stem + ".json", r.to_json());
    if (r.post_logit && r.post_probit) {
      econ::RegressionTable t({{"Logit", &*r.post_logit}, {"Probit", &*r.post_probit}});
      s.write(stem + ".txt", t.to_text());
    }
  }

  for (const auto& m : cfg.moderation) {
    const auto r = econ::moderation(panel, cfg.model(m.model), m.moderator);
    const auto stem = "moderation_" + detail::file_stem(m.model + "_" + m.moderator);
    s.write_json(stem + ".json", {{"moderator", r.moderator}, {"logit", r.logit.to_json()}, {"probit", r.probit.to_json()}});
    econ::RegressionTable t({{"Logit", &r.logit}, {"Probit", &r.probit}});
    s.write(stem + ".txt", t.to_text());
  }

  for (const auto& h : cfg.heterogeneity) {
    const auto fitsh = econ::heterogeneity(panel, cfg.model(h.model), h.split, h.labels);
    const auto stem = "heterogeneity_" + detail::file_stem(h.model + "_" + h.split);
    auto j = nlohmann::json::array();
    std::vector<econ::TableColumn> tc;
    for (const auto& f : fitsh) {
      nlohmann::json e{{"label", f.label}, {"value", f.value}, {"n", f.n}};
      if (f.result) {
        e["result"] = f.result->to_json();
        tc.push_back({f.label, &*f.result});
      } else {
        e["skipped"] = f.skipped;
      }
      j.push_back(e);
    }
    s.write_json(stem + ".json", j);
    if (!tc.empty()) s.write(stem + ".txt", econ::RegressionTable(tc).to_text());
  }

  summary["models"] = cfg.models.size();
  for (const auto& [name, r] : fits)
    summary["convergence"][name] = {{"converged", r.converged}, {"diagnosis", r.diagnosis}, {"warnings", r.warnings}};
  s.write_json("summary.json", summary);
  s.finish();
}

// --- placebo --------------------------------------------------------------

inline void cmd_placebo(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("placebo", cfg, opt);
  if (!cfg.placebo) throw Error(ErrorCode::InvalidConfig, "config has no placebo section");
  const auto panel = econ::Panel::read_csv(s.require("estimate", "panel.csv", "estimation panel"));
  econ::PlaceboOptions po;
  po.replications = cfg.placebo->replications;
  po.mode = cfg.placebo->mode;
  po.seed = derive_seed(cfg.require_seed("placebo"), 3);
  const auto r = econ::placebo(panel, cfg.model(cfg.placebo->model), po);
  s.write_json("report.json", r.to_json());
  s.write("density.csv", r.density_csv());
  s.finish();
}

// --- report ---------------------------------------------------------------

inline void cmd_report(const PipelineConfig& cfg, const RunOptions& opt) {
  Stage s("report", cfg, opt);
  auto copy = [&](const std::string& stage, const std::string& rel, const std::string& what, bool required = true) {
    const auto p = s.artifact(stage, rel);
    if (!required && !fs::exists(p)) return false;
    s.require(stage, rel, what);
    s.write(stage + "/" + rel, io::read_file(p));
    return true;
  };
  copy("ingest", "corpus_stats.csv", "corpus statistics");
  copy("indicators", "distribution.csv", "indicator distribution");
  copy("indicators", "gi_histogram.json", "GI histogram");
  copy("indicators", "group_means.csv", "group means");
  copy("validate", "summary.json", "validation summary");
  copy("validate", "layer_a.json", "model comparison", false);
  copy("validate", "ablation.json", "ablation report", false);
  copy("validate", "ablation_metrics.csv", "ablation metrics", false);
  copy("validate", "ablation_buckets.csv", "ablation buckets", false);
  copy("estimate", "summary.json", "estimation summary");
  copy("estimate", "descriptive.csv", "descriptive statistics");
  std::vector<fs::path> tables;
  for (const auto& e : fs::directory_iterator(s.artifact("estimate", "")))
    if (e.path().extension() == ".txt" || e.path().filename() == "ame.json") tables.push_back(e.path());
  std::sort(tables.begin(), tables.end());
  for (const auto& t : tables) copy("estimate", t.filename().string(), "estimation table");
  copy("placebo", "report.json", "placebo report", false);
  copy("placebo", "density.csv", "placebo density", false);

  nlohmann::json manifests = nlohmann::json::object();
  for (const char* stage : {"ingest", "segment", "judge_a", "indicators", "validate", "estimate", "placebo"}) {
    const auto p = s.artifact(stage, "manifest.json");
    if (fs::exists(p)) manifests[stage] = io::read_json(p);
  }
  for (auto a : {judge::Arm::Control, judge::Arm::RAG, judge::Arm::ExtendedContext}) {
    const auto p = s.artifact("judge_b", detail::arm_dir(a) + "/manifest.json");
    if (fs::exists(p)) manifests[std::string("judge_b/") + judge::to_string(a)] = io::read_json(p);
  }
  s.write_json("manifests.json", manifests);
  s.finish();
}

/// Every stage in order; judge-b runs once per arm needed downstream.
inline void run_all(const PipelineConfig& cfg, const RunOptions& opt) {
  cmd_ingest(cfg, opt);
  cmd_segment(cfg, opt);
  cmd_judge_a(cfg, opt);
  std::vector<judge::Arm> arms{cfg.indicator_arm};
  if (!cfg.pair_labels.empty())
    for (auto a : cfg.ablation_arms)
      if (std::find(arms.begin(), arms.end(), a) == arms.end()) arms.push_back(a);
  for (auto a : arms) {
    RunOptions o = opt;
    o.arm = a;
    cmd_judge_b(cfg, o);
  }
  cmd_indicators(cfg, opt);
  cmd_validate(cfg, opt);
  cmd_estimate(cfg, opt);
  if (cfg.placebo) cmd_placebo(cfg, opt);
  cmd_report(cfg, opt);
}

}  // namespace deepgreen::pipeline
