#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/glm.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/random.hpp"
#include "deepgreen/util/stats.hpp"

namespace deepgreen::econ {

enum class PlaceboMode { permute, bernoulli };

inline PlaceboMode parse_placebo_mode(const std::string& s) {
  if (s == "permute" || s.empty()) return PlaceboMode::permute;
  if (s == "bernoulli") return PlaceboMode::bernoulli;
  throw Error(ErrorCode::InvalidConfig, "placebo mode must be permute or bernoulli");
}

struct PlaceboOptions {
  std::size_t replications = 500;
  std::uint64_t seed = 0;
  PlaceboMode mode = PlaceboMode::permute;
  unsigned threads = 0;  // 0: hardware concurrency
  double max_nonconverged = 0.05;
  std::size_t density_points = 200;
};

struct PlaceboDraw {
  double coefficient = 0.0;
  double p_value = 0.0;
  bool converged = false;
};

struct PlaceboReport {
  std::string variable;
  double actual = 0.0;
  double actual_p = 0.0;
  std::vector<PlaceboDraw> draws;
  double mean = 0.0;
  double sd = 0.0;
  double p_value = 0.0;  // two-sided: share of |draw - mean| >= |actual - mean|
  double lower_95 = 0.0, upper_95 = 0.0;
  std::size_t nonconverged = 0;
  stats::DensityTable density;

  std::vector<double> coefficients() const {
    std::vector<double> v;
    for (const auto& d : draws)
      if (d.converged) v.push_back(d.coefficient);
    return v;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"variable", variable},     {"actual", actual},   {"actual_p", actual_p},
                     {"replications", draws.size()}, {"mean", mean}, {"sd", sd},
                     {"p_value", p_value},       {"lower_95", lower_95}, {"upper_95", upper_95},
                     {"nonconverged", nonconverged}};
    for (const auto& d : draws) j["draws"].push_back({d.coefficient, d.p_value, d.converged});
    return j;
  }

  std::string density_csv() const {
    std::string out = "x,density\n";
    char buf[64];
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", density.grid[i], density.density[i]);
      out += buf;
    }
    return out;
  }
};

/// Re-estimates `spec` B times with the variable of interest replaced by a
/// random placebo: a permutation of its values over the estimation sample,
/// or Bernoulli draws at its empirical rate. Replicate i uses the stream
/// derive_seed(seed, i), so draws do not depend on thread scheduling.
inline PlaceboReport placebo(const Panel& panel, const ModelSpec& spec, const PlaceboOptions& opt) {
  if (opt.replications < 200) throw Error(ErrorCode::InvalidConfig, "placebo needs at least 200 replications");
  const auto design = build_design(panel, spec);
  FitOptions fo;
  fo.model_name = spec.name;
  fo.pseudo_r2 = false;
  const auto actual = fit(design, spec.family, fo);
  const auto c = static_cast<std::size_t>(design.index_of(design.core));

  PlaceboReport report;
  report.variable = design.core;
  report.actual = actual.coef(static_cast<Eigen::Index>(c));
  report.actual_p = actual.p_value(c);
  report.draws.resize(opt.replications);

  const Eigen::VectorXd original = design.X.col(static_cast<Eigen::Index>(c));
  const double rate = original.mean();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(opt.threads ? opt.threads : hw, static_cast<unsigned>(opt.replications));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    DesignMatrix local = design;
    for (std::size_t i = next++; i < opt.replications; i = next++) {
      Rng rng(derive_seed(opt.seed, i));
      Eigen::VectorXd v = original;
      if (opt.mode == PlaceboMode::permute) {
        for (Eigen::Index k = v.size() - 1; k > 0; --k)
          std::swap(v(k), v(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k) + 1))));
      } else {
        for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.uniform() < rate ? 1.0 : 0.0;
      }
      local.replace_variable(design.core, v);
      PlaceboDraw d;
      try {
        const auto r = fit(local, spec.family, fo);
        d.coefficient = r.coef(static_cast<Eigen::Index>(c));
        d.p_value = r.p_value(c);
        d.converged = r.converged && std::isfinite(d.coefficient);
      } catch (const Error&) {
        d.converged = false;
      }
      report.draws[i] = d;
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (const auto& d : report.draws)
    if (!d.converged) ++report.nonconverged;
  const double frac = static_cast<double>(report.nonconverged) / static_cast<double>(opt.replications);
  if (frac > opt.max_nonconverged)
    throw Error(ErrorCode::NonConvergedFraction, std::to_string(report.nonconverged) + " of " +
                                                     std::to_string(opt.replications) + " placebo fits did not converge");

  const auto coefs = report.coefficients();
  report.mean = stats::mean(coefs);
  report.sd = stats::sample_sd(coefs);
  const double dev = std::abs(report.actual - report.mean);
  std::size_t extreme = 0;
  for (double b : coefs)
    if (std::abs(b - report.mean) >= dev) ++extreme;
  report.p_value = (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(coefs.size()));
  report.lower_95 = stats::quantile(coefs, 0.025);
  report.upper_95 = stats::quantile(coefs, 0.975);
  report.density = stats::gaussian_kde(coefs, opt.density_points);
  return report;
}

}  // namespace deepgreen::econ
