#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/util/stats.hpp"

namespace deepgreen::econ {

struct EstimationResult {
  std::string model;
  Family family = Family::logit;
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  bool t_statistics = false;  // OLS-type inference with df_resid
  double df_resid = 0.0;
  double log_likelihood = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double pseudo_r2 = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  bool converged = false;
  int iterations = 0;
  std::string diagnosis;
  std::map<std::string, double> extras;
  std::vector<std::string> dropped;
  std::vector<std::string> fe_columns;
  std::vector<std::string> warnings;

  std::ptrdiff_t index_of(const std::string& name) const {
    const auto l = lower(name);
    for (std::size_t i = 0; i < names.size(); ++i)
      if (lower(names[i]) == l) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }
  bool has(const std::string& name) const { return index_of(name) >= 0; }

  std::size_t at(const std::string& name) const {
    auto i = index_of(name);
    if (i < 0) throw Error(ErrorCode::InvalidConfig, "model '" + model + "' has no coefficient '" + name + "'");
    return static_cast<std::size_t>(i);
  }

  double coefficient(const std::string& name) const { return coef(static_cast<Eigen::Index>(at(name))); }
  double std_error(const std::string& name) const { return std_error(at(name)); }
  double statistic(const std::string& name) const { return statistic(at(name)); }
  double p_value(const std::string& name) const { return p_value(at(name)); }

  double std_error(std::size_t i) const {
    const double v = vcov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    return v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
  }
  double statistic(std::size_t i) const { return coef(static_cast<Eigen::Index>(i)) / std_error(i); }
  double p_value(std::size_t i) const {
    const double s = std::abs(statistic(i));
    if (!std::isfinite(s)) return std::numeric_limits<double>::quiet_NaN();
    if (t_statistics && df_resid > 0) {
      boost::math::students_t dist(df_resid);
      return 2.0 * boost::math::cdf(boost::math::complement(dist, s));
    }
    return std::erfc(s / std::sqrt(2.0));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["family"] = to_string(family);
    nlohmann::json c = nlohmann::json::object(), se = nlohmann::json::object(), z = nlohmann::json::object(),
                   p = nlohmann::json::object();
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    for (std::size_t i = 0; i < names.size(); ++i) {
      c[names[i]] = num(coef(static_cast<Eigen::Index>(i)));
      se[names[i]] = num(std_error(i));
      z[names[i]] = num(statistic(i));
      p[names[i]] = num(p_value(i));
    }
    j["coefficients"] = c;
    j["std_errors"] = se;
    j[t_statistics ? "t" : "z"] = z;
    j["p_values"] = p;
    j["log_likelihood"] = num(log_likelihood);
    if (family == Family::ols) j["r2"] = num(r2);
    else j["pseudo_r2"] = num(pseudo_r2);
    j["n"] = n;
    j["converged"] = converged;
    j["iterations"] = iterations;
    if (!diagnosis.empty()) j["diagnosis"] = diagnosis;
    nlohmann::json ex = nlohmann::json::object();
    for (const auto& [k, v] : extras) ex[k] = num(v);
    j["extras"] = ex;
    j["dropped"] = dropped;
    j["warnings"] = warnings;
    return j;
  }
};

}  // namespace deepgreen::econ
