#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "deepgreen/error.hpp"
#include "deepgreen/util/csv.hpp"

namespace deepgreen::econ {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

/// Firm-year panel in column form. Identifier columns are typed; every other
/// column is numeric with NaN for missing. Column names are lower-cased, so
/// "Vio_num" and "vio_num" refer to the same variable.
class Panel {
 public:
  std::vector<std::string> firm_id;
  std::vector<int> year;
  std::vector<std::string> industry;

  std::size_t rows() const { return firm_id.size(); }

  bool has(const std::string& name) const { return columns_.contains(lower(name)); }

  const std::vector<double>& column(const std::string& name) const {
    auto it = columns_.find(lower(name));
    if (it == columns_.end()) throw Error(ErrorCode::InvalidConfig, "panel has no column '" + name + "'");
    return it->second;
  }

  std::vector<double>& set_column(const std::string& name, std::vector<double> values) {
    if (values.size() != rows()) throw Error(ErrorCode::InvalidConfig, "column '" + name + "' has the wrong length");
    auto& slot = columns_[lower(name)];
    slot = std::move(values);
    return slot;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : columns_) out.push_back(k);
    return out;
  }

  void add_row(std::string firm, int yr, std::string ind, const std::map<std::string, double>& values) {
    const std::size_t n = rows();
    firm_id.push_back(std::move(firm));
    year.push_back(yr);
    industry.push_back(std::move(ind));
    for (auto& [name, col] : columns_) col.push_back(kMissing);
    for (const auto& [name, v] : values) {
      auto& col = columns_[lower(name)];
      if (col.size() < n + 1) col.resize(n + 1, kMissing);
      col[n] = v;
    }
  }

  Panel subset(const std::vector<std::size_t>& idx) const {
    Panel p;
    for (auto i : idx) {
      p.firm_id.push_back(firm_id[i]);
      p.year.push_back(year[i]);
      p.industry.push_back(industry[i]);
    }
    for (const auto& [name, col] : columns_) {
      std::vector<double> c;
      c.reserve(idx.size());
      for (auto i : idx) c.push_back(col[i]);
      p.columns_[name] = std::move(c);
    }
    return p;
  }

  /// Value of `source` for the same firm in the previous calendar year, NaN
  /// when that year is absent. Returns the number of rows with a lag.
  std::size_t add_lag(const std::string& source, const std::string& name) {
    const auto& src = column(source);
    std::map<std::pair<std::string, int>, double> by_key;
    for (std::size_t i = 0; i < rows(); ++i) by_key[{firm_id[i], year[i]}] = src[i];
    std::vector<double> lag(rows(), kMissing);
    std::size_t found = 0;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (auto it = by_key.find({firm_id[i], year[i] - 1}); it != by_key.end() && !is_missing(it->second)) {
        lag[i] = it->second;
        ++found;
      }
    }
    set_column(name, std::move(lag));
    return found;
  }

  /// CSV with firm_id, year, industry_code (or industry) plus numeric
  /// columns; blank, "NA" and "." are missing.
  static Panel from_table(const csv::Table& t) {
    Panel p;
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < t.header().size(); ++i) idx[lower(t.header()[i])] = i;
    auto need = [&](std::initializer_list<const char*> names) {
      for (auto n : names)
        if (auto it = idx.find(n); it != idx.end()) return it->second;
      throw Error(ErrorCode::IoError, std::string("panel CSV needs a '") + *names.begin() + "' column");
    };
    const auto fcol = need({"firm_id"});
    const auto ycol = need({"year"});
    const auto icol = need({"industry_code", "industry"});
    std::vector<std::pair<std::string, std::size_t>> numeric;
    for (const auto& [name, i] : idx)
      if (i != fcol && i != ycol && i != icol) numeric.emplace_back(name, i);
    for (const auto& [name, _] : numeric) p.columns_[name];
    for (const auto& row : t.rows()) {
      p.firm_id.push_back(row[fcol]);
      p.year.push_back(std::stoi(row[ycol]));
      p.industry.push_back(row[icol]);
      for (const auto& [name, i] : numeric) {
        const auto& v = row[i];
        double x = kMissing;
        if (!v.empty() && v != "NA" && v != "." && v != "nan") {
          try {
            x = std::stod(v);
          } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, "non-numeric value '" + v + "' in column '" + name + "'");
          }
        }
        p.columns_[name].push_back(x);
      }
    }
    return p;
  }

  static Panel read_csv(const std::filesystem::path& path) { return from_table(csv::Table::read(path.string())); }

  std::string to_csv() const {
    std::string out = "firm_id,year,industry_code";
    for (const auto& [name, _] : columns_) out += "," + name;
    out += "\n";
    char buf[40];
    for (std::size_t i = 0; i < rows(); ++i) {
      out += csv::escape(firm_id[i]) + "," + std::to_string(year[i]) + "," + csv::escape(industry[i]);
      for (const auto& [_, col] : columns_) {
        if (is_missing(col[i])) {
          out += ",";
        } else {
          std::snprintf(buf, sizeof(buf), ",%.17g", col[i]);
          out += buf;
        }
      }
      out += "\n";
    }
    return out;
  }

 private:
  std::map<std::string, std::vector<double>> columns_;
};

}  // namespace deepgreen::econ
