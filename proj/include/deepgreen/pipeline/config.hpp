#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/corpus.hpp"
#include "deepgreen/econ.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/indicators.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/retrieval.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/io.hpp"

namespace deepgreen::pipeline {

namespace fs = std::filesystem;

struct PlanConfig {
  std::size_t n_per_replicate = 100;
  std::size_t replicates = 1;
};

struct AmeConfig {
  std::string model;
  std::string regressor;
};

struct PsmConfig {
  std::string name = "psm";
  econ::PsmSpec spec;
};

struct ModerationConfig {
  std::string model;
  std::string moderator;
};

struct HeterogeneityConfig {
  std::string model;
  std::string split;
  std::map<double, std::string> labels;
};

struct PlaceboConfig {
  std::string model;
  std::size_t replications = 500;
  econ::PlaceboMode mode = econ::PlaceboMode::permute;
};

/// Everything a run needs. Relative paths in the file are resolved against
/// the directory holding the config file.
struct PipelineConfig {
  fs::path base_dir;
  std::string corpus_id = "corpus";

  fs::path reports;
  fs::path meta;
  std::optional<corpus::SectionPatternSet> section_patterns;
  fs::path stopwords;
  fs::path segmenter_dictionary;
  fs::path template_a;
  fs::path template_b;

  std::vector<llm::BackendConfig> backends;
  std::string champion;

  judge::AblationArm arm;
  std::optional<llm::RetrievalConfig> retrieval;

  fs::path esg;
  indicators::Grouping grouping = indicators::Grouping::IndustryYear;
  judge::Arm indicator_arm = judge::Arm::Control;

  fs::path word_labels;
  fs::path pair_labels;
  PlanConfig layer_a_plan{100, 10};
  PlanConfig layer_b_plan{500, 1};
  std::vector<judge::Arm> ablation_arms;

  fs::path panel;
  std::vector<econ::ModelSpec> models;
  std::vector<AmeConfig> ame;
  std::vector<econ::IvSpec> iv;
  std::vector<PsmConfig> psm;
  std::vector<ModerationConfig> moderation;
  std::vector<HeterogeneityConfig> heterogeneity;
  std::optional<PlaceboConfig> placebo;

  std::optional<std::uint64_t> seed;
  fs::path output;

  // Hash of the file with scheduling-only fields (max_inflight) removed, so
  // runs that differ only in concurrency share one config identity.
  std::string config_hash;

  const llm::BackendConfig& backend(const std::string& id) const {
    const std::string want = id.empty() ? champion : id;
    for (const auto& b : backends)
      if (b.backend_id == want) return b;
    throw Error(ErrorCode::InvalidConfig, "no backend '" + want + "' in config");
  }

  const econ::ModelSpec& model(const std::string& name) const {
    for (const auto& m : models)
      if (m.name == name) return m;
    throw Error(ErrorCode::InvalidConfig, "no model named '" + name + "' in config");
  }

  std::uint64_t require_seed(const std::string& step) const {
    if (!seed) throw Error(ErrorCode::InvalidConfig, step + " is stochastic and needs a seed (config \"seed\" or --seed)");
    return *seed;
  }

  /// Path as recorded in manifests: relative to the config directory.
  std::string display(const fs::path& p) const { return p.lexically_relative(base_dir).generic_string(); }
};

namespace detail {

inline llm::BackendKind parse_kind(const std::string& s) {
  if (s == "mock") return llm::BackendKind::mock;
  if (s == "http_api" || s == "http") return llm::BackendKind::http_api;
  if (s == "local") return llm::BackendKind::local;
  throw Error(ErrorCode::InvalidConfig, "unknown backend kind '" + s + "'");
}

inline nlohmann::json strip_scheduling(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("max_inflight");
    for (auto& [_, v] : j.items()) v = strip_scheduling(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_scheduling(v);
  }
  return j;
}

inline PlanConfig parse_plan(const nlohmann::json& j, PlanConfig d) {
  d.n_per_replicate = j.value("n_per_replicate", d.n_per_replicate);
  d.replicates = j.value("replicates", d.replicates);
  return d;
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = fs::absolute(base_dir).lexically_normal();
  auto path = [&](const std::string& rel) { return rel.empty() ? fs::path() : (c.base_dir / rel).lexically_normal(); };
  auto opt_path = [&](const nlohmann::json& obj, const char* key) {
    return obj.contains(key) && obj[key].is_string() ? path(obj[key].get<std::string>()) : fs::path();
  };

  try {
    c.corpus_id = j.value("corpus_id", c.corpus_id);
    c.reports = path(j.at("reports").get<std::string>());
    c.meta = path(j.at("meta").get<std::string>());
    if (j.contains("section_patterns") && !j["section_patterns"].is_null())
      c.section_patterns = corpus::SectionPatternSet::from_json(j["section_patterns"]);
    c.stopwords = path(j.at("stopwords").get<std::string>());
    c.segmenter_dictionary = path(j.at("segmenter_dictionary").get<std::string>());
    c.template_a = path(j.at("templates").at("layer_a").get<std::string>());
    c.template_b = path(j.at("templates").at("layer_b").get<std::string>());

    for (const auto& b : j.at("backends")) {
      llm::BackendConfig bc;
      bc.backend_id = b.at("backend_id").get<std::string>();
      bc.kind = detail::parse_kind(b.value("kind", std::string("mock")));
      bc.endpoint = b.value("endpoint", std::string{});
      bc.model_name = b.value("model_name", std::string{});
      bc.api_key_env = b.value("api_key_env", bc.api_key_env);
      if (b.contains("fixture")) bc.fixture_path = path(b["fixture"].get<std::string>()).string();
      bc.max_inflight = b.value("max_inflight", bc.max_inflight);
      bc.max_retries = b.value("max_retries", bc.max_retries);
      bc.timeout_ms = b.value("timeout_ms", bc.timeout_ms);
      bc.temperature = b.value("temperature", bc.temperature);
      bc.top_p = b.value("top_p", bc.top_p);
      bc.validate();
      c.backends.push_back(std::move(bc));
    }
    if (c.backends.empty()) throw Error(ErrorCode::InvalidConfig, "config lists no backends");
    c.champion = j.value("champion", c.backends.front().backend_id);
    (void)c.backend(c.champion);

    if (j.contains("layer_b")) {
      const auto& lb = j["layer_b"];
      c.arm.arm = judge::parse_arm(lb.value("arm", std::string("control")));
      c.arm.context_window_sentences = lb.value("context_window_sentences", c.arm.context_window_sentences);
      if (lb.contains("retrieval")) {
        const auto& r = lb["retrieval"];
        llm::RetrievalConfig rc;
        rc.provider_id = r.value("provider_id", std::string("snapshot"));
        if (r.contains("snapshot")) rc.snapshot_path = path(r["snapshot"].get<std::string>()).string();
        rc.endpoint = r.value("endpoint", std::string{});
        rc.max_passages = r.value("max_passages", rc.max_passages);
        if (rc.snapshot_path.empty() && rc.endpoint.empty())
          throw Error(ErrorCode::InvalidConfig, "retrieval needs a snapshot or an endpoint");
        c.arm.retrieval = rc;
        c.retrieval = rc;
      }
    }

    const auto ind = j.value("indicators", nlohmann::json::object());
    c.esg = path(ind.at("esg").get<std::string>());
    c.grouping = indicators::parse_grouping(ind.value("grouping", std::string("industry_year")));
    c.indicator_arm = judge::parse_arm(ind.value("arm", std::string("control")));

    const auto val = j.value("validation", nlohmann::json::object());
    c.word_labels = opt_path(val, "word_labels");
    c.pair_labels = opt_path(val, "pair_labels");
    if (val.contains("layer_a_plan")) c.layer_a_plan = detail::parse_plan(val["layer_a_plan"], c.layer_a_plan);
    if (val.contains("layer_b_plan")) c.layer_b_plan = detail::parse_plan(val["layer_b_plan"], c.layer_b_plan);
    for (const auto& a : val.value("arms", std::vector<std::string>{"control"})) c.ablation_arms.push_back(judge::parse_arm(a));

    c.panel = opt_path(j, "panel");
    for (const auto& m : j.value("models", nlohmann::json::array())) c.models.push_back(econ::ModelSpec::from_json(m));
    for (const auto& a : j.value("ame", nlohmann::json::array()))
      c.ame.push_back({a.at("model").get<std::string>(), a.at("regressor").get<std::string>()});
    for (const auto& s : j.value("iv", nlohmann::json::array())) c.iv.push_back(econ::IvSpec::from_json(s));
    for (const auto& p : j.value("psm", nlohmann::json::array())) {
      PsmConfig pc;
      pc.name = p.value("name", std::string("psm"));
      pc.spec.treatment = p.at("treatment").get<std::string>();
      pc.spec.covariates = p.at("covariates").get<std::vector<std::string>>();
      if (p.contains("caliper")) pc.spec.caliper = p["caliper"].get<double>();
      for (const auto& fe : p.value("score_fixed_effects", std::vector<std::string>{})) {
        if (fe == "year") pc.spec.score_fixed_effects.year = true;
        else if (fe == "industry") pc.spec.score_fixed_effects.industry = true;
        else throw Error(ErrorCode::InvalidConfig, "unknown fixed effect '" + fe + "'");
      }
      if (p.contains("outcome_model")) pc.spec.outcome = c.model(p["outcome_model"].get<std::string>());
      c.psm.push_back(std::move(pc));
    }
    for (const auto& m : j.value("moderation", nlohmann::json::array()))
      c.moderation.push_back({m.at("model").get<std::string>(), m.at("moderator").get<std::string>()});
    for (const auto& h : j.value("heterogeneity", nlohmann::json::array())) {
      HeterogeneityConfig hc{h.at("model").get<std::string>(), h.at("split").get<std::string>(), {}};
      const auto labels = h.value("labels", nlohmann::json::object());
      for (const auto& [k, v] : labels.items()) hc.labels[std::stod(k)] = v.get<std::string>();
      c.heterogeneity.push_back(std::move(hc));
    }
    if (j.contains("placebo")) {
      const auto& p = j["placebo"];
      PlaceboConfig pc;
      pc.model = p.at("model").get<std::string>();
      pc.replications = p.value("replications", pc.replications);
      pc.mode = econ::parse_placebo_mode(p.value("mode", std::string("permute")));
      c.placebo = pc;
    }
    for (const auto& a : c.ame) (void)c.model(a.model);
    for (const auto& m : c.moderation) (void)c.model(m.model);
    for (const auto& h : c.heterogeneity) (void)c.model(h.model);
    if (c.placebo) (void)c.model(c.placebo->model);

    if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
    c.output = path(j.value("output", std::string("out")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  c.config_hash = hash_hex(detail::strip_scheduling(j).dump());
  return c;
}

/// Reads and validates a config file: every referenced input must exist.
inline PipelineConfig load_config(const fs::path& file) {
  if (!fs::exists(file)) throw Error(ErrorCode::InvalidConfig, "config not found: " + file.string());
  auto c = parse_config(io::read_json(file), fs::absolute(file).parent_path());
  auto need = [&](const fs::path& p, const std::string& what) {
    if (!p.empty() && !fs::exists(p)) throw Error(ErrorCode::InvalidConfig, what + " not found: " + p.string());
  };
  need(c.reports, "reports");
  need(c.meta, "meta");
  need(c.stopwords, "stopwords");
  need(c.segmenter_dictionary, "segmenter dictionary");
  need(c.template_a, "layer A template");
  need(c.template_b, "layer B template");
  need(c.esg, "ESG table");
  need(c.word_labels, "word labels");
  need(c.pair_labels, "pair labels");
  need(c.panel, "panel");
  for (const auto& b : c.backends)
    if (b.kind == llm::BackendKind::mock) need(b.fixture_path, "mock fixture for " + b.backend_id);
  if (c.retrieval && !c.retrieval->snapshot_path.empty()) need(c.retrieval->snapshot_path, "retrieval snapshot");
  return c;
}

}  // namespace deepgreen::pipeline
