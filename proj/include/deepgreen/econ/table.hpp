#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "deepgreen/econ/result.hpp"
#include "deepgreen/util/csv.hpp"

namespace deepgreen::econ {

inline std::string stars(double p) {
  if (!std::isfinite(p)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

struct TableColumn {
  std::string header;
  const EstimationResult* result = nullptr;
};

/// Regression table: one column per model, coefficient with stars and the
/// standard error beneath in parentheses. Fixed-effect dummies and
/// first-stage rows are summarized rather than listed.
class RegressionTable {
 public:
  explicit RegressionTable(std::vector<TableColumn> cols, int digits = 4) : cols_(std::move(cols)), digits_(digits) {}

  std::vector<std::string> row_names() const {
    std::vector<std::string> rows;
    for (const auto& c : cols_)
      for (std::size_t i = 0; i < c.result->names.size(); ++i) {
        const auto& n = c.result->names[i];
        if (is_fe(*c.result, n) || n.rfind("first:", 0) == 0 || n == "_cons") continue;
        if (std::find(rows.begin(), rows.end(), n) == rows.end()) rows.push_back(n);
      }
    rows.push_back("_cons");
    return rows;
  }

  std::vector<std::vector<std::string>> cells() const {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> head{""};
    for (const auto& c : cols_) head.push_back(c.header);
    out.push_back(head);
    for (const auto& name : row_names()) {
      std::vector<std::string> coef{name}, se{""};
      for (const auto& c : cols_) {
        const auto i = c.result->index_of(name);
        if (i < 0) {
          coef.emplace_back();
          se.emplace_back();
          continue;
        }
        const auto k = static_cast<std::size_t>(i);
        coef.push_back(num(c.result->coef(i)) + stars(c.result->p_value(k)));
        se.push_back("(" + num(c.result->std_error(k)) + ")");
      }
      out.push_back(coef);
      out.push_back(se);
    }
    auto footer = [&](const std::string& label, auto fn) {
      std::vector<std::string> row{label};
      for (const auto& c : cols_) row.push_back(fn(*c.result));
      out.push_back(row);
    };
    footer("Year FE", [](const EstimationResult& r) { return has_prefix(r, "year=") ? "YES" : "NO"; });
    footer("Ind FE", [](const EstimationResult& r) { return has_prefix(r, "ind=") ? "YES" : "NO"; });
    if (std::any_of(cols_.begin(), cols_.end(), [](const auto& c) { return has_prefix(*c.result, "cell="); }))
      footer("Year x Ind FE", [](const EstimationResult& r) { return has_prefix(r, "cell=") ? "YES" : "NO"; });
    footer("N", [](const EstimationResult& r) { return std::to_string(r.n); });
    footer("R2", [&](const EstimationResult& r) {
      const double v = r.family == Family::ols ? r.r2 : r.pseudo_r2;
      return std::isfinite(v) ? num(v) : std::string();
    });
    return out;
  }

  std::string to_text() const {
    const auto rows = cells();
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    std::string rule(total, '-');
    std::string out = rule + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        const auto& cell = rows[i][j];
        const auto pad = width[j] - cell.size();
        if (j == 0) out += cell + std::string(pad + 2, ' ');
        else out += std::string(pad + 2, ' ') + cell;
      }
      out += "\n";
      if (i == 0) out += rule + "\n";
    }
    out += rule + "\n* p<0.1, ** p<0.05, *** p<0.01; standard errors in parentheses\n";
    return out;
  }

  std::string to_csv() const {
    std::string out;
    for (const auto& r : cells()) out += csv::format_row(r);
    return out;
  }

 private:
  std::string num(double v) const {
    if (!std::isfinite(v)) return ".";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits_, v);
    return buf;
  }
  static bool is_fe(const EstimationResult& r, const std::string& name) {
    return std::find(r.fe_columns.begin(), r.fe_columns.end(), name) != r.fe_columns.end();
  }
  static bool has_prefix(const EstimationResult& r, const std::string& prefix) {
    return std::any_of(r.fe_columns.begin(), r.fe_columns.end(), [&](const auto& n) { return n.rfind(prefix, 0) == 0; });
  }

  std::vector<TableColumn> cols_;
  int digits_;
};

}  // namespace deepgreen::econ
