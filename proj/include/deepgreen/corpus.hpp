#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/segment.hpp"
#include "deepgreen/util/csv.hpp"
#include "deepgreen/util/io.hpp"
#include "deepgreen/util/stats.hpp"
#include "deepgreen/util/utf8.hpp"

namespace deepgreen::corpus {

struct ReportDocument {
  std::string firm_id;
  int year = 0;
  std::string full_text;
  std::string source_path;
};

struct FirmMeta {
  std::string firm_id;
  int year = 0;  // 0 when the row applies to every year
  std::string industry_code;
  std::set<std::string> status_labels;
  bool is_financial = false;
  int listing_year = 0;
};

struct EnvSection {
  std::string firm_id;
  int year = 0;
  std::string text;
  std::size_t sentence_count = 0;
  std::size_t word_count = 0;
  std::size_t target_word_count = 0;
  bool ambiguous = false;  // more than one disjoint span was concatenated
};

inline void to_json(nlohmann::json& j, const EnvSection& s) {
  j = nlohmann::json{{"firm_id", s.firm_id},
                     {"year", s.year},
                     {"text", s.text},
                     {"sentence_count", s.sentence_count},
                     {"word_count", s.word_count},
                     {"target_word_count", s.target_word_count},
                     {"ambiguous", s.ambiguous}};
}

inline void from_json(const nlohmann::json& j, EnvSection& s) {
  j.at("firm_id").get_to(s.firm_id);
  j.at("year").get_to(s.year);
  j.at("text").get_to(s.text);
  s.sentence_count = j.value("sentence_count", std::size_t{0});
  s.word_count = j.value("word_count", std::size_t{0});
  s.target_word_count = j.value("target_word_count", std::size_t{0});
  s.ambiguous = j.value("ambiguous", false);
}

/// Ordered start and end markers for the environmental subsection. Patterns
/// are ECMAScript regexes applied to UTF-8 bytes, so character classes must
/// not contain multi-byte characters; use alternation ("(五|六)") instead.
struct SectionPatternSet {
  std::vector<std::string> start;
  std::vector<std::string> end;

  /// Post-2021 Chinese annual-report layout (Section 5 "环境和社会责任",
  /// subsections "环境信息情况" then "社会责任工作情况"), plus English headers.
  static SectionPatternSet defaults() {
    const std::string num = "(一|二|三|四|五|六|七|八|九|十)";
    return SectionPatternSet{
        {num + "、\\s*(重大)?环境信息", "环境信息情况", "环境信息", "Environmental Information"},
        {num + "、\\s*社会责任", "社会责任工作情况", "第(六|七|八)节", "社会责任", "Social Responsibility"},
    };
  }

  static SectionPatternSet from_json(const nlohmann::json& j) {
    SectionPatternSet p;
    j.at("start").get_to(p.start);
    j.at("end").get_to(p.end);
    if (p.start.empty() || p.end.empty())
      throw Error(ErrorCode::InvalidConfig, "section patterns need at least one start and one end marker");
    return p;
  }
};

namespace detail {

struct Match {
  std::size_t begin = std::string::npos;
  std::size_t end = std::string::npos;
};

/// Earliest match at or after `from` across all patterns; ties go to the
/// pattern listed first.
inline Match earliest(const std::string& text, std::size_t from, const std::vector<std::regex>& patterns) {
  Match best;
  for (const auto& re : patterns) {
    std::smatch m;
    auto first = text.begin() + static_cast<std::ptrdiff_t>(from);
    if (std::regex_search(first, text.end(), m, re)) {
      const std::size_t b = from + static_cast<std::size_t>(m.position(0));
      if (best.begin == std::string::npos || b < best.begin) {
        best.begin = b;
        best.end = b + static_cast<std::size_t>(m.length(0));
      }
    }
  }
  return best;
}

inline std::vector<std::regex> compile(const std::vector<std::string>& patterns) {
  std::vector<std::regex> out;
  for (const auto& p : patterns) {
    try {
      out.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidConfig, "bad section pattern '" + p + "': " + e.what());
    }
  }
  return out;
}

}  // namespace detail

/// Fills sentence/word/target-word counts from the text.
inline void measure(EnvSection& s, const segment::TextAnalyzer& analyzer) {
  s.sentence_count = s.word_count = s.target_word_count = 0;
  if (s.text.empty()) return;
  s.sentence_count = analyzer.sentences(s.text).size();
  s.word_count = analyzer.words(s.text).size();
  s.target_word_count = analyzer.target_words(s.text).size();
}

/// Span from a start marker (inclusive) up to the next end marker
/// (exclusive), or to the end of the text when no end marker follows.
/// Further start markers after that end yield more spans, which are
/// concatenated in document order with the ambiguity flag set.
inline EnvSection extract_env_section(const ReportDocument& doc, const SectionPatternSet& patterns,
                                      const segment::TextAnalyzer& analyzer) {
  if (doc.firm_id.empty()) throw Error(ErrorCode::MalformedDocument, "document without firm_id: " + doc.source_path);
  if (!utf8::valid(doc.full_text))
    throw Error(ErrorCode::MalformedDocument, "text is not valid UTF-8: " + doc.source_path);

  const auto starts = detail::compile(patterns.start);
  const auto ends = detail::compile(patterns.end);

  EnvSection section;
  section.firm_id = doc.firm_id;
  section.year = doc.year;
  std::vector<std::string> spans;
  std::size_t cursor = 0;
  const std::string& text = doc.full_text;
  while (cursor < text.size()) {
    const auto s = detail::earliest(text, cursor, starts);
    if (s.begin == std::string::npos) break;
    const auto e = detail::earliest(text, s.end, ends);
    const std::size_t stop = e.begin == std::string::npos ? text.size() : e.begin;
    spans.push_back(text.substr(s.begin, stop - s.begin));
    if (e.begin == std::string::npos) break;
    cursor = std::max(e.end, e.begin + 1);
  }
  section.ambiguous = spans.size() > 1;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) section.text.push_back('\n');
    section.text += spans[i];
  }
  measure(section, analyzer);
  return section;
}

/// Excludes ST / *ST / PT labels and financial firms.
inline bool filter_universe(const FirmMeta& meta) {
  static const std::set<std::string> excluded{"ST", "*ST", "PT"};
  for (const auto& label : meta.status_labels)
    if (excluded.contains(label)) return false;
  return !meta.is_financial;
}

struct StatsRow {
  std::string variable;
  stats::Summary summary;
};

using DescriptiveStatsTable = std::vector<StatsRow>;

inline DescriptiveStatsTable corpus_stats(const std::vector<EnvSection>& sections) {
  if (sections.empty()) throw Error(ErrorCode::EmptyInput, "corpus_stats needs at least one section");
  std::vector<double> sentences, words, targets;
  for (const auto& s : sections) {
    sentences.push_back(static_cast<double>(s.sentence_count));
    words.push_back(static_cast<double>(s.word_count));
    targets.push_back(static_cast<double>(s.target_word_count));
  }
  return {{"Sentences", stats::summarize(sentences)},
          {"Words", stats::summarize(words)},
          {"Target Words", stats::summarize(targets)}};
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string stats_csv(const DescriptiveStatsTable& table) {
  std::string out = csv::format_row({"", "Obvs", "Mean", "Std", "Min", "50%", "Max", "Skew", "Kurt"});
  for (const auto& row : table) {
    const auto& s = row.summary;
    out += csv::format_row({row.variable, std::to_string(s.obvs), format_number(s.mean), format_number(s.std),
                            format_number(s.min), format_number(s.median), format_number(s.max),
                            format_number(s.skewness), format_number(s.kurtosis)});
  }
  return out;
}

// --- file formats ---------------------------------------------------------

inline bool parse_bool(const std::string& v) {
  std::string s;
  for (char c : v) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return s == "1" || s == "true" || s == "yes" || s == "y";
}

/// Metadata CSV: firm_id, year, industry_code, status_labels, is_financial,
/// listing_year. Multiple status labels are separated by '|' or ';'.
inline std::vector<FirmMeta> load_meta(const std::filesystem::path& path) {
  const auto table = csv::Table::read(path.string());
  std::vector<FirmMeta> out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    FirmMeta m;
    m.firm_id = table.at(r, "firm_id");
    m.year = table.has("year") && !table.at(r, "year").empty() ? std::stoi(table.at(r, "year")) : 0;
    m.industry_code = table.at(r, "industry_code");
    std::string labels = table.at(r, "status_labels");
    std::string cur;
    for (char c : labels + "|") {
      if (c == '|' || c == ';') {
        while (!cur.empty() && cur.back() == ' ') cur.pop_back();
        while (!cur.empty() && cur.front() == ' ') cur.erase(0, 1);
        if (!cur.empty()) m.status_labels.insert(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    m.is_financial = parse_bool(table.at(r, "is_financial"));
    const auto& ly = table.at(r, "listing_year");
    m.listing_year = ly.empty() ? 0 : std::stoi(ly);
    out.push_back(std::move(m));
  }
  return out;
}

/// Metadata lookup by (firm_id, year) with a fallback to the year-0 row.
class MetaIndex {
 public:
  MetaIndex() = default;
  explicit MetaIndex(const std::vector<FirmMeta>& rows) {
    for (const auto& m : rows) rows_[{m.firm_id, m.year}] = m;
  }

  const FirmMeta* find(const std::string& firm_id, int year) const {
    if (auto it = rows_.find({firm_id, year}); it != rows_.end()) return &it->second;
    if (auto it = rows_.find({firm_id, 0}); it != rows_.end()) return &it->second;
    return nullptr;
  }

 private:
  std::map<std::pair<std::string, int>, FirmMeta> rows_;
};

/// Reads reports from a directory of "<firm_id>_<year>.txt" files and/or
/// JSON-lines files with {firm_id, year, text} records. Sorted by
/// (firm_id, year).
inline std::vector<ReportDocument> load_reports(const std::filesystem::path& path) {
  std::vector<ReportDocument> docs;
  auto load_jsonl = [&](const std::filesystem::path& p) {
    for (const auto& j : io::read_jsonl(p)) {
      ReportDocument d;
      d.firm_id = j.at("firm_id").get<std::string>();
      d.year = j.at("year").get<int>();
      d.full_text = j.at("text").get<std::string>();
      d.source_path = p.string();
      docs.push_back(std::move(d));
    }
  };
  auto load_txt = [&](const std::filesystem::path& p) {
    const std::string stem = p.stem().string();
    const auto us = stem.rfind('_');
    if (us == std::string::npos) throw Error(ErrorCode::MalformedDocument, "report file name must be <firm_id>_<year>.txt: " + p.string());
    ReportDocument d;
    d.firm_id = stem.substr(0, us);
    d.year = std::stoi(stem.substr(us + 1));
    d.full_text = io::read_file(p);
    d.source_path = p.string();
    docs.push_back(std::move(d));
  };

  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (f.extension() == ".txt") load_txt(f);
      else if (f.extension() == ".jsonl") load_jsonl(f);
    }
  } else if (path.extension() == ".jsonl") {
    load_jsonl(path);
  } else {
    load_txt(path);
  }
  std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year);
  });
  return docs;
}

inline std::vector<EnvSection> load_sections(const std::filesystem::path& path) {
  std::vector<EnvSection> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(j.get<EnvSection>());
  return out;
}

inline std::string sections_jsonl(const std::vector<EnvSection>& sections) {
  std::string out;
  for (const auto& s : sections) {
    out += nlohmann::json(s).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace deepgreen::corpus
