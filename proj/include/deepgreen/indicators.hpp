#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deepgreen/corpus.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/util/csv.hpp"

namespace deepgreen::indicators {

/// Share of substantive disclosure, X / (X + Y); 0 when nothing was
/// disclosed or everything was symbolic.
inline double compute_gi(long x, long y) {
  if (x < 0 || y < 0) throw Error(ErrorCode::NegativeCount, "X and Y must be non-negative");
  if (x + y == 0) return 0.0;
  return static_cast<double>(x) / static_cast<double>(x + y);
}

struct FirmYearIndicator {
  std::string firm_id;
  int year = 0;
  std::string industry_code;
  long x = 0;
  long y = 0;
  double gi = 0.0;
  std::optional<double> esg_e;
  int greenwashing = 0;
  bool esg_missing() const { return !esg_e.has_value(); }
};

enum class Grouping { IndustryYear, Industry };

inline Grouping parse_grouping(const std::string& s) {
  if (s == "industry_year") return Grouping::IndustryYear;
  if (s == "industry") return Grouping::Industry;
  throw Error(ErrorCode::InvalidConfig, "grouping must be industry_year or industry");
}

struct GroupKey {
  std::string industry_code;
  std::optional<int> year;
  auto operator<=>(const GroupKey&) const = default;
};

inline GroupKey group_key(const FirmYearIndicator& ind, Grouping g) {
  return GroupKey{ind.industry_code, g == Grouping::IndustryYear ? std::optional<int>(ind.year) : std::nullopt};
}

struct GroupMeans {
  GroupKey key;
  double gi_mean = 0.0;
  double esg_e_mean = 0.0;
  std::size_t n = 0;
};

/// Arithmetic means of GI and ESG_E per group, over rows with an ESG_E
/// score. Groups without any scored row are left out.
inline std::vector<GroupMeans> compute_group_means(const std::vector<FirmYearIndicator>& rows, Grouping grouping) {
  if (rows.empty()) throw Error(ErrorCode::EmptyGroup, "no indicator rows");
  std::map<GroupKey, GroupMeans> acc;
  for (const auto& r : rows) {
    if (r.industry_code.empty()) throw Error(ErrorCode::EmptyGroup, "firm " + r.firm_id + " has no industry code");
    if (!r.esg_e) continue;
    auto& g = acc[group_key(r, grouping)];
    g.gi_mean += r.gi;
    g.esg_e_mean += *r.esg_e;
    ++g.n;
  }
  std::vector<GroupMeans> out;
  for (auto& [key, g] : acc) {
    g.key = key;
    g.gi_mean /= static_cast<double>(g.n);
    g.esg_e_mean /= static_cast<double>(g.n);
    out.push_back(g);
  }
  return out;
}

/// 1 iff GI is strictly above the group mean and ESG_E strictly below it.
/// Rows without an ESG_E score are never flagged.
inline int flag_greenwashing(const FirmYearIndicator& ind, const GroupMeans& means) {
  if (ind.industry_code != means.key.industry_code || (means.key.year && *means.key.year != ind.year))
    throw Error(ErrorCode::GroupMismatch, "firm " + ind.firm_id + " is not in the given group");
  if (!ind.esg_e) return 0;
  return (ind.gi > means.gi_mean && *ind.esg_e < means.esg_e_mean) ? 1 : 0;
}

/// Sets GI and the greenwashing flag on every row.
inline std::vector<GroupMeans> apply_flags(std::vector<FirmYearIndicator>& rows, Grouping grouping) {
  for (auto& r : rows) r.gi = compute_gi(r.x, r.y);
  auto means = compute_group_means(rows, grouping);
  std::map<GroupKey, const GroupMeans*> index;
  for (const auto& m : means) index[m.key] = &m;
  for (auto& r : rows) {
    auto it = index.find(group_key(r, grouping));
    r.greenwashing = it == index.end() ? 0 : flag_greenwashing(r, *it->second);
  }
  return means;
}

/// ESG_E table: firm_id, year, esg_e (blank for missing).
inline std::map<std::pair<std::string, int>, double> load_esg(const std::filesystem::path& path) {
  const auto t = csv::Table::read(path.string());
  std::map<std::pair<std::string, int>, double> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto& v = t.at(r, "esg_e");
    if (v.empty() || v == "NA" || v == ".") continue;
    out[{t.at(r, "firm_id"), std::stoi(t.at(r, "year"))}] = std::stod(v);
  }
  return out;
}

/// Joins X/Y counts with industry codes and ESG_E scores, then flags.
/// Firm-years missing from `counts` get X = Y = 0.
inline std::vector<FirmYearIndicator> build_indicators(const std::vector<judge::XYCount>& counts,
                                                       const corpus::MetaIndex& meta,
                                                       const std::map<std::pair<std::string, int>, double>& esg,
                                                       Grouping grouping) {
  std::vector<FirmYearIndicator> rows;
  for (const auto& c : counts) {
    FirmYearIndicator r;
    r.firm_id = c.firm_id;
    r.year = c.year;
    r.x = c.x;
    r.y = c.y;
    const auto* m = meta.find(c.firm_id, c.year);
    if (!m) throw Error(ErrorCode::EmptyGroup, "no metadata for " + c.firm_id + " " + std::to_string(c.year));
    r.industry_code = m->industry_code;
    if (auto it = esg.find({c.firm_id, c.year}); it != esg.end()) r.esg_e = it->second;
    rows.push_back(std::move(r));
  }
  apply_flags(rows, grouping);
  return rows;
}

inline std::string indicators_csv(const std::vector<FirmYearIndicator>& rows) {
  std::string out = "firm_id,year,industry_code,x,y,gi,esg_e,greenwashing,esg_missing\n";
  char gi[32], esg[32];
  for (const auto& r : rows) {
    std::snprintf(gi, sizeof(gi), "%.17g", r.gi);
    if (r.esg_e) std::snprintf(esg, sizeof(esg), "%.17g", *r.esg_e);
    out += csv::format_row({r.firm_id, std::to_string(r.year), r.industry_code, std::to_string(r.x), std::to_string(r.y),
                            gi, r.esg_e ? std::string(esg) : std::string(), std::to_string(r.greenwashing),
                            r.esg_missing() ? "1" : "0"});
  }
  return out;
}

inline std::vector<FirmYearIndicator> load_indicators(const std::filesystem::path& path) {
  const auto t = csv::Table::read(path.string());
  std::vector<FirmYearIndicator> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    FirmYearIndicator i;
    i.firm_id = t.at(r, "firm_id");
    i.year = std::stoi(t.at(r, "year"));
    i.industry_code = t.at(r, "industry_code");
    i.x = std::stol(t.at(r, "x"));
    i.y = std::stol(t.at(r, "y"));
    i.gi = std::stod(t.at(r, "gi"));
    if (!t.at(r, "esg_e").empty()) i.esg_e = std::stod(t.at(r, "esg_e"));
    i.greenwashing = std::stoi(t.at(r, "greenwashing"));
    out.push_back(std::move(i));
  }
  return out;
}

}  // namespace deepgreen::indicators
