#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/glm.hpp"
#include "deepgreen/error.hpp"

namespace deepgreen::econ {

struct ModerationResult {
  std::string moderator;
  EstimationResult logit;
  EstimationResult probit;
};

/// Adds `moderator` as a main effect (if absent) and its interaction with
/// the variable of interest, then fits logit and probit. Rows missing the
/// moderator drop out of these fits only.
inline ModerationResult moderation(const Panel& panel, const ModelSpec& base, const std::string& moderator) {
  if (!panel.has(moderator)) throw Error(ErrorCode::InvalidConfig, "moderator '" + moderator + "' not in panel");
  if (base.regressors.empty()) throw Error(ErrorCode::InvalidConfig, "moderation needs a variable of interest");
  ModelSpec s = base;
  const auto m = lower(moderator);
  if (std::none_of(s.regressors.begin(), s.regressors.end(), [&](const auto& r) { return lower(r) == m; }))
    s.regressors.insert(s.regressors.begin() + 1, moderator);
  s.interactions.emplace_back(s.regressors.front(), moderator);
  ModerationResult out;
  out.moderator = m;
  for (Family f : {Family::logit, Family::probit}) {
    s.family = f;
    s.name = base.name + " x " + m + " " + to_string(f);
    auto r = estimate(panel, s);
    if (r.index_of(interaction_name(s.regressors.front(), moderator)) < 0)
      r.warnings.push_back("interaction " + interaction_name(s.regressors.front(), moderator) + " dropped as collinear");
    (f == Family::logit ? out.logit : out.probit) = std::move(r);
  }
  return out;
}

struct SubsampleFit {
  std::string label;
  double value = 0.0;
  std::size_t n = 0;
  std::optional<EstimationResult> result;
  std::string skipped;  // reason, empty when fitted
};

/// Independent fits of `spec` on each level of `split`. Subsamples with
/// fewer than parameters + 10 rows are reported as skipped.
inline std::vector<SubsampleFit> heterogeneity(const Panel& panel, const ModelSpec& spec, const std::string& split,
                                               const std::map<double, std::string>& labels = {}) {
  const auto& col = panel.column(split);
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    if (is_missing(col[i])) throw Error(ErrorCode::InvalidConfig, "split '" + split + "' is missing for some rows");
    groups[col[i]].push_back(i);
  }
  std::vector<SubsampleFit> out;
  for (const auto& [value, rows] : groups) {
    SubsampleFit s;
    s.value = value;
    if (auto it = labels.find(value); it != labels.end()) s.label = it->second;
    else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s=%g", lower(split).c_str(), value);
      s.label = buf;
    }
    const Panel sub = panel.subset(rows);
    ModelSpec m = spec;
    m.name = spec.name + " [" + s.label + "]";
    try {
      const auto d = build_design(sub, m);
      s.n = d.n();
      const std::size_t params = d.k() + (m.family == Family::negbin ? 1 : 0);
      if (s.n < params + 10) {
        s.skipped = "N=" + std::to_string(s.n) + " < parameters + 10";
      } else {
        FitOptions fo;
        fo.vcov = m.vcov;
        fo.model_name = m.name;
        s.result = fit(d, m.family, fo);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyAfterFilter && e.code() != ErrorCode::RankDeficient) throw;
      s.skipped = e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace deepgreen::econ
