#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "deepgreen/error.hpp"

namespace deepgreen::stats {

/// Summary row in the layout Obvs / Mean / Std / Min / Median / Max / Skew /
/// Kurt. Std is the n-1 sample deviation; skewness is the adjusted
/// Fisher-Pearson G1 and kurtosis the adjusted excess G2. Degenerate cases
/// (n < 2 for std, n < 3 for skew, n < 4 for kurt, zero variance) report 0.
struct Summary {
  std::size_t obvs = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(n - 1);
}

inline double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

/// Linear-interpolated quantile (type 7), q in [0, 1].
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline Summary summarize(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "summary of empty sample");
  Summary s;
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  s.obvs = n;
  s.mean = mean(x);
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  s.min = *lo;
  s.max = *hi;
  s.median = quantile(std::vector<double>(x.begin(), x.end()), 0.5);

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  s.std = n > 1 ? std::sqrt(m2 * nd / (nd - 1.0)) : 0.0;
  // Relative threshold: a constant column can leave rounding residue in m2.
  const bool degenerate = m2 <= 1e-28 * std::max(1.0, s.mean * s.mean);
  if (degenerate) {
    s.std = 0.0;
    return s;
  }
  if (n > 2) {
    const double g1 = m3 / std::pow(m2, 1.5);
    s.skewness = g1 * std::sqrt(nd * (nd - 1.0)) / (nd - 2.0);
  }
  if (n > 3) {
    const double g2 = m4 / (m2 * m2) - 3.0;
    s.kurtosis = ((nd + 1.0) * g2 + 6.0) * (nd - 1.0) / ((nd - 2.0) * (nd - 3.0));
  }
  return s;
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Equal-width histogram on [lo, hi]; the last bin is closed. Densities
/// integrate to one over the range.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::size_t total = 0;
};

inline Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "histogram of empty sample");
  if (bins == 0 || !(hi > lo)) throw Error(ErrorCode::InvalidConfig, "histogram needs bins > 0 and hi > lo");
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo || v > hi || std::isnan(v))
      throw Error(ErrorCode::OutOfRange, "histogram value outside [lo, hi]");
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  h.total = values.size();
  h.density.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(h.total) * width);
  return h;
}

/// Silverman's rule of thumb: 0.9 min(sd, IQR/1.34) n^(-1/5).
inline double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) return 1.0;
  const double sd = sample_sd(x);
  std::vector<double> v(x.begin(), x.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

struct DensityTable {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian kernel density on an evenly spaced grid extending three
/// bandwidths past the sample range.
inline DensityTable gaussian_kde(std::span<const double> x, std::size_t points = 200, double bandwidth = 0.0) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "kde of empty sample");
  DensityTable t;
  t.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(x);
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double a = *lo - 3.0 * t.bandwidth;
  const double b = *hi + 3.0 * t.bandwidth;
  const double step = points > 1 ? (b - a) / static_cast<double>(points - 1) : 0.0;
  const double norm = 1.0 / (static_cast<double>(x.size()) * t.bandwidth);
  for (std::size_t i = 0; i < points; ++i) {
    const double g = a + step * static_cast<double>(i);
    double s = 0.0;
    for (double v : x) s += normal_pdf((g - v) / t.bandwidth);
    t.grid.push_back(g);
    t.density.push_back(s * norm);
  }
  return t;
}

}  // namespace deepgreen::stats
