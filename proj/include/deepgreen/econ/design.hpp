#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "deepgreen/econ/panel.hpp"
#include "deepgreen/error.hpp"

namespace deepgreen::econ {

enum class Family { logit, probit, ols, poisson, negbin };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::logit: return "logit";
    case Family::probit: return "probit";
    case Family::ols: return "ols";
    case Family::poisson: return "poisson";
    case Family::negbin: return "negbin";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  const auto l = lower(s);
  if (l == "logit") return Family::logit;
  if (l == "probit") return Family::probit;
  if (l == "ols") return Family::ols;
  if (l == "poisson") return Family::poisson;
  if (l == "negbin" || l == "nbreg" || l == "negative_binomial") return Family::negbin;
  throw Error(ErrorCode::InvalidConfig, "unknown model family '" + s + "'");
}

enum class VcovType { conventional, robust, cluster_firm };

inline VcovType parse_vcov(const std::string& s) {
  if (s == "conventional" || s.empty()) return VcovType::conventional;
  if (s == "robust") return VcovType::robust;
  if (s == "cluster" || s == "cluster_firm") return VcovType::cluster_firm;
  throw Error(ErrorCode::InvalidConfig, "unknown vcov type '" + s + "'");
}

struct FixedEffects {
  bool year = false;
  bool industry = false;
  bool year_industry = false;  // one dummy per (year, industry) cell
};

/// Equality filter on a numeric column, e.g. esg_investor == 1.
struct SubsampleFilter {
  std::string column;
  double value = 0.0;
};

struct ModelSpec {
  std::string name;
  std::string dependent;
  std::vector<std::string> regressors;  // regressors[0] is the variable of interest
  std::vector<std::pair<std::string, std::string>> interactions;
  FixedEffects fixed_effects;
  Family family = Family::logit;
  std::optional<SubsampleFilter> subsample;
  VcovType vcov = VcovType::conventional;

  void validate() const {
    if (dependent.empty()) throw Error(ErrorCode::InvalidConfig, "model '" + name + "' has no dependent variable");
    for (const auto& r : regressors)
      if (lower(r) == lower(dependent))
        throw Error(ErrorCode::InvalidConfig, "model '" + name + "': dependent variable used as a regressor");
    for (const auto& [a, b] : interactions) {
      auto present = [&](const std::string& v) {
        return std::any_of(regressors.begin(), regressors.end(), [&](const auto& r) { return lower(r) == lower(v); });
      };
      if (!present(a) || !present(b))
        throw Error(ErrorCode::InvalidConfig, "model '" + name + "': interaction " + a + "#" + b +
                                                  " needs both components as main effects");
    }
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.name = j.value("name", std::string{});
    s.dependent = j.at("dependent").get<std::string>();
    s.regressors = j.value("regressors", std::vector<std::string>{});
    for (const auto& i : j.value("interactions", nlohmann::json::array()))
      s.interactions.emplace_back(i.at(0).get<std::string>(), i.at(1).get<std::string>());
    for (const auto& fe : j.value("fixed_effects", std::vector<std::string>{})) {
      if (fe == "year") s.fixed_effects.year = true;
      else if (fe == "industry") s.fixed_effects.industry = true;
      else if (fe == "year_industry") s.fixed_effects.year_industry = true;
      else throw Error(ErrorCode::InvalidConfig, "unknown fixed effect '" + fe + "'");
    }
    s.family = parse_family(j.value("family", std::string("logit")));
    if (j.contains("subsample"))
      s.subsample = SubsampleFilter{j["subsample"].at("column").get<std::string>(), j["subsample"].at("value").get<double>()};
    s.vcov = parse_vcov(j.value("vcov", std::string("conventional")));
    s.validate();
    return s;
  }
};

inline std::string interaction_name(const std::string& a, const std::string& b) { return lower(a) + "#" + lower(b); }

/// Regression inputs after filtering, listwise deletion, dummy coding and
/// collinearity removal. Column 0 is always the intercept "_cons".
struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<std::size_t> rows;         // panel row of each observation
  std::vector<std::string> clusters;     // firm id of each observation
  std::vector<std::string> dropped;      // collinear columns removed
  std::vector<std::string> fe_columns;   // dummy columns kept
  std::string core;                      // variable of interest

  struct Interaction {
    std::string a, b;
    Eigen::VectorXd a_values, b_values;  // raw component values per observation
  };
  std::map<std::string, Interaction> interactions;  // keyed by kept column name

  std::ptrdiff_t index_of(const std::string& name) const {
    const auto l = lower(name);
    for (std::size_t i = 0; i < names.size(); ++i)
      if (lower(names[i]) == l) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(X.cols()); }

  /// Copy of X with `variable` set to `value` on every row; interaction
  /// columns involving it are recomputed.
  Eigen::MatrixXd counterfactual(const std::string& variable, double value) const {
    Eigen::MatrixXd Xc = X;
    const auto v = lower(variable);
    if (auto c = index_of(v); c >= 0) Xc.col(c).setConstant(value);
    for (const auto& [name, inter] : interactions) {
      const auto c = index_of(name);
      if (inter.a == v && inter.b == v) Xc.col(c).setConstant(value * value);
      else if (inter.a == v) Xc.col(c) = value * inter.b_values;
      else if (inter.b == v) Xc.col(c) = value * inter.a_values;
    }
    return Xc;
  }

  /// Replaces the values of a main-effect regressor and refreshes the
  /// interactions built on it.
  void replace_variable(const std::string& variable, const Eigen::VectorXd& values) {
    const auto v = lower(variable);
    if (auto c = index_of(v); c >= 0) X.col(c) = values;
    for (auto& [name, inter] : interactions) {
      const auto c = index_of(name);
      if (inter.a == v) inter.a_values = values;
      if (inter.b == v) inter.b_values = values;
      if (inter.a == v || inter.b == v) X.col(c) = inter.a_values.cwiseProduct(inter.b_values);
    }
  }
};

struct DesignOptions {
  std::vector<std::string> require;  // extra columns that must be non-missing (e.g. an instrument)
  double collinearity_tol = 1e-9;
};

/// Builds the design for `spec` on `panel`. Fixed effects get one dummy per
/// level except the first (sorted) level. Columns that are linear
/// combinations of earlier ones are dropped and listed; dropping the
/// variable of interest is an error.
inline DesignMatrix build_design(const Panel& panel, const ModelSpec& spec, const DesignOptions& opts = {}) {
  spec.validate();
  if (panel.rows() == 0) throw Error(ErrorCode::EmptyAfterFilter, "empty panel");

  std::vector<std::string> needed{spec.dependent};
  for (const auto& r : spec.regressors) needed.push_back(r);
  for (const auto& r : opts.require) needed.push_back(r);
  std::vector<const std::vector<double>*> cols;
  for (const auto& c : needed) cols.push_back(&panel.column(c));

  const std::vector<double>* filter_col = spec.subsample ? &panel.column(spec.subsample->column) : nullptr;
  std::vector<std::size_t> rows;
  bool any_in_filter = false;
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    if (filter_col) {
      if (is_missing((*filter_col)[i]) || (*filter_col)[i] != spec.subsample->value) continue;
      any_in_filter = true;
    }
    bool ok = true;
    for (const auto* c : cols)
      if (is_missing((*c)[i])) {
        ok = false;
        break;
      }
    if (ok) rows.push_back(i);
  }
  if (rows.empty())
    throw Error(ErrorCode::EmptyAfterFilter, "model '" + spec.name + "': no complete rows" +
                                                 (filter_col && !any_in_filter ? " (subsample filter matched nothing)" : ""));

  const auto n = static_cast<Eigen::Index>(rows.size());
  struct Candidate {
    std::string name;
    Eigen::VectorXd values;
    bool fe = false;
  };
  std::vector<Candidate> candidates;
  candidates.push_back({"_cons", Eigen::VectorXd::Ones(n)});
  auto gather = [&](const std::string& name) {
    const auto& c = panel.column(name);
    Eigen::VectorXd v(n);
    for (Eigen::Index r = 0; r < n; ++r) v(r) = c[rows[static_cast<std::size_t>(r)]];
    return v;
  };
  std::set<std::string> seen;
  for (const auto& r : spec.regressors)
    if (seen.insert(lower(r)).second) candidates.push_back({lower(r), gather(r)});
  std::map<std::string, DesignMatrix::Interaction> inter_meta;
  for (const auto& [a, b] : spec.interactions) {
    DesignMatrix::Interaction meta{lower(a), lower(b), gather(a), gather(b)};
    const auto name = interaction_name(a, b);
    candidates.push_back({name, meta.a_values.cwiseProduct(meta.b_values)});
    inter_meta[name] = std::move(meta);
  }
  auto add_dummies = [&](const std::string& prefix, const std::vector<std::string>& level_of_row) {
    std::set<std::string> levels(level_of_row.begin(), level_of_row.end());
    bool first = true;
    for (const auto& level : levels) {
      if (first) {
        first = false;
        continue;
      }
      Eigen::VectorXd v(n);
      for (Eigen::Index r = 0; r < n; ++r) v(r) = level_of_row[static_cast<std::size_t>(r)] == level ? 1.0 : 0.0;
      candidates.push_back({prefix + "=" + level, std::move(v), true});
    }
  };
  std::vector<std::string> ind(rows.size()), cell(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", panel.year[rows[r]]);  // zero-padded so levels sort numerically
    ind[r] = panel.industry[rows[r]];
    cell[r] = std::string(buf) + "|" + ind[r];
  }
  if (spec.fixed_effects.year) {
    std::vector<std::string> padded(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%06d", panel.year[rows[r]]);
      padded[r] = buf;
    }
    const auto before = candidates.size();
    add_dummies("year", padded);
    for (auto i = before; i < candidates.size(); ++i)
      candidates[i].name = "year=" + std::to_string(std::stoi(candidates[i].name.substr(5)));
  }
  if (spec.fixed_effects.industry) add_dummies("ind", ind);
  if (spec.fixed_effects.year_industry) add_dummies("cell", cell);

  // Sequential Gram-Schmidt (two passes) against the kept columns.
  DesignMatrix d;
  d.core = spec.regressors.empty() ? std::string() : lower(spec.regressors.front());
  std::vector<Eigen::VectorXd> basis;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& v = candidates[c].values;
    const double norm = v.norm();
    bool keep = norm > 0.0;
    if (keep) {
      Eigen::VectorXd r = v;
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) r -= q.dot(r) * q;
      const double rn = r.norm();
      keep = rn > opts.collinearity_tol * norm;
      if (keep) basis.push_back(r / rn);
    }
    if (keep) {
      kept.push_back(c);
    } else {
      if (candidates[c].name == d.core)
        throw Error(ErrorCode::RankDeficient, "model '" + spec.name + "': '" + d.core + "' is collinear with other regressors");
      d.dropped.push_back(candidates[c].name);
    }
  }

  d.X.resize(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    auto& cand = candidates[kept[j]];
    d.X.col(static_cast<Eigen::Index>(j)) = cand.values;
    d.names.push_back(cand.name);
    if (cand.fe) d.fe_columns.push_back(cand.name);
    if (auto it = inter_meta.find(cand.name); it != inter_meta.end()) d.interactions[cand.name] = it->second;
  }
  d.y = gather(spec.dependent);
  d.rows = std::move(rows);
  for (auto r : d.rows) d.clusters.push_back(panel.firm_id[r]);
  return d;
}

}  // namespace deepgreen::econ
