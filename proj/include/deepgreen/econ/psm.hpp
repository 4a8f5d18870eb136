#pragma once

#include <cmath>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/glm.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/util/stats.hpp"

namespace deepgreen::econ {

/// Greedy 1:1 nearest-neighbour matching without replacement. Treated units
/// are visited in descending score order; each takes the closest unused
/// control (ties go to the lower control index). Returns (treated, control)
/// index pairs in visiting order; treated units beyond the caliper stay
/// unmatched.
inline std::vector<std::pair<std::size_t, std::size_t>> match_nearest(const std::vector<double>& treated,
                                                                      const std::vector<double>& controls,
                                                                      std::optional<double> caliper = std::nullopt) {
  if (controls.size() < treated.size())
    throw Error(ErrorCode::InsufficientControls, std::to_string(controls.size()) + " controls for " +
                                                      std::to_string(treated.size()) + " treated units");
  std::vector<std::size_t> order(treated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return treated[a] > treated[b]; });

  std::set<std::pair<double, std::size_t>> pool;
  for (std::size_t j = 0; j < controls.size(); ++j) pool.emplace(controls[j], j);

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto t : order) {
    if (pool.empty()) break;
    const double s = treated[t];
    auto hi = pool.lower_bound({s, 0});
    // nearest distance among neighbours, then the lowest index at that distance
    double best = std::numeric_limits<double>::infinity();
    if (hi != pool.end()) best = std::min(best, hi->first - s);
    if (hi != pool.begin()) best = std::min(best, s - std::prev(hi)->first);
    if (caliper && best > *caliper) continue;
    std::size_t pick = std::numeric_limits<std::size_t>::max();
    std::set<std::pair<double, std::size_t>>::iterator pick_it;
    for (auto it = hi; it != pool.end() && it->first - s == best; ++it)
      if (it->second < pick) pick = it->second, pick_it = it;
    for (auto it = hi; it != pool.begin();) {
      --it;
      if (s - it->first != best) break;
      if (it->second < pick) pick = it->second, pick_it = it;
    }
    out.emplace_back(t, pick);
    pool.erase(pick_it);
  }
  return out;
}

/// 100 (mean_T - mean_C) / sqrt((var_T + var_C) / 2) with the given
/// variances.
inline double standardized_bias(double mean_t, double mean_c, double var_t, double var_c) {
  const double denom = std::sqrt(0.5 * (var_t + var_c));
  if (denom == 0.0) return mean_t == mean_c ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean_t - mean_c);
  return 100.0 * (mean_t - mean_c) / denom;
}

struct CovariateBalance {
  std::string covariate;
  double mean_treated_before = 0, mean_control_before = 0;
  double mean_treated_after = 0, mean_control_after = 0;
  double bias_before = 0, bias_after = 0;
  double reduction() const { return bias_before == 0 ? 0.0 : 100.0 * (1.0 - std::abs(bias_after) / std::abs(bias_before)); }
};

struct PsmResult {
  std::vector<double> scores;                                 // per panel row used, NaN when excluded
  std::vector<std::pair<std::size_t, std::size_t>> matches;   // panel rows (treated, control)
  std::vector<CovariateBalance> balance;
  std::size_t n_treated = 0;
  std::size_t n_controls = 0;
  std::size_t unmatched = 0;
  EstimationResult score_model;
  std::optional<EstimationResult> post_logit;
  std::optional<EstimationResult> post_probit;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n_treated"] = n_treated;
    j["n_controls"] = n_controls;
    j["n_matched"] = matches.size();
    j["unmatched"] = unmatched;
    for (const auto& b : balance)
      j["balance"].push_back({{"covariate", b.covariate},
                              {"mean_treated_before", b.mean_treated_before},
                              {"mean_control_before", b.mean_control_before},
                              {"mean_treated_after", b.mean_treated_after},
                              {"mean_control_after", b.mean_control_after},
                              {"bias_before", b.bias_before},
                              {"bias_after", b.bias_after},
                              {"reduction", b.reduction()}});
    j["score_model"] = score_model.to_json();
    if (post_logit) j["post_logit"] = post_logit->to_json();
    if (post_probit) j["post_probit"] = post_probit->to_json();
    return j;
  }
};

struct PsmSpec {
  std::string treatment;
  std::vector<std::string> covariates;
  FixedEffects score_fixed_effects;
  std::optional<double> caliper;
  std::optional<ModelSpec> outcome;  // refit as logit and probit on the matched sample
};

/// Propensity scores from a logit of treatment on covariates, greedy 1:1
/// matching, balance table (pre-match variances in the denominator both
/// before and after) and optional outcome refits on the matched rows.
inline PsmResult psm(const Panel& panel, const PsmSpec& spec) {
  ModelSpec score;
  score.name = "propensity score";
  score.dependent = spec.treatment;
  score.regressors = spec.covariates;
  score.fixed_effects = spec.score_fixed_effects;
  score.family = Family::logit;
  const auto d = build_design(panel, score);
  PsmResult out;
  FitOptions fo;
  fo.model_name = score.name;
  out.score_model = fit_logit(d, fo);
  const Eigen::VectorXd eta = d.X * out.score_model.coef;

  out.scores.assign(panel.rows(), kMissing);
  std::vector<double> ts, cs;
  std::vector<std::size_t> trow, crow;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double p = detail::logistic(eta(static_cast<Eigen::Index>(i)));
    out.scores[d.rows[i]] = p;
    if (d.y(static_cast<Eigen::Index>(i)) == 1.0) {
      ts.push_back(p);
      trow.push_back(d.rows[i]);
    } else {
      cs.push_back(p);
      crow.push_back(d.rows[i]);
    }
  }
  out.n_treated = ts.size();
  out.n_controls = cs.size();
  for (auto [t, c] : match_nearest(ts, cs, spec.caliper)) out.matches.emplace_back(trow[t], crow[c]);
  out.unmatched = out.n_treated - out.matches.size();

  for (const auto& cov : spec.covariates) {
    const auto& col = panel.column(cov);
    auto gather = [&](const std::vector<std::size_t>& rows) {
      std::vector<double> v;
      for (auto r : rows) v.push_back(col[r]);
      return v;
    };
    std::vector<std::size_t> mt, mc;
    for (auto [t, c] : out.matches) {
      mt.push_back(t);
      mc.push_back(c);
    }
    const auto bt = gather(trow), bc = gather(crow), at = gather(mt), ac = gather(mc);
    CovariateBalance b;
    b.covariate = lower(cov);
    b.mean_treated_before = stats::mean(bt);
    b.mean_control_before = stats::mean(bc);
    const double vt = bt.size() > 1 ? stats::sample_variance(bt) : 0.0;
    const double vc = bc.size() > 1 ? stats::sample_variance(bc) : 0.0;
    b.bias_before = standardized_bias(b.mean_treated_before, b.mean_control_before, vt, vc);
    if (!at.empty()) {
      b.mean_treated_after = stats::mean(at);
      b.mean_control_after = stats::mean(ac);
      b.bias_after = standardized_bias(b.mean_treated_after, b.mean_control_after, vt, vc);
    }
    out.balance.push_back(b);
  }

  if (spec.outcome && !out.matches.empty()) {
    std::vector<std::size_t> rows;
    for (auto [t, c] : out.matches) {
      rows.push_back(t);
      rows.push_back(c);
    }
    std::sort(rows.begin(), rows.end());
    const Panel matched = panel.subset(rows);
    for (Family f : {Family::logit, Family::probit}) {
      ModelSpec m = *spec.outcome;
      m.family = f;
      m.name = spec.outcome->name + " matched " + to_string(f);
      auto r = estimate(matched, m);
      (f == Family::logit ? out.post_logit : out.post_probit) = std::move(r);
    }
  }
  return out;
}

}  // namespace deepgreen::econ
