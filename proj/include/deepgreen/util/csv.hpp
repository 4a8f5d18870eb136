#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepgreen/error.hpp"

namespace deepgreen::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(row[i]);
  }
  out.push_back('\n');
  return out;
}

/// A parsed file with a header row; lookups are by column name.
class Table {
 public:
  Table() = default;

  static Table from_text(std::string_view text, const std::string& source = "<memory>") {
    Table t;
    auto rows = parse(text);
    if (rows.empty()) throw Error(ErrorCode::IoError, source + ": empty CSV");
    t.header_ = std::move(rows.front());
    for (std::size_t i = 0; i < t.header_.size(); ++i) {
      auto& h = t.header_[i];
      // Strip a UTF-8 BOM from the first header cell.
      if (i == 0 && h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
      t.index_[h] = i;
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      auto& row = rows[r];
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != t.header_.size())
        throw Error(ErrorCode::IoError, source + ": row " + std::to_string(r + 1) + " has " +
                                            std::to_string(row.size()) + " fields, expected " +
                                            std::to_string(t.header_.size()));
      t.rows_.push_back(std::move(row));
    }
    return t;
  }

  static Table read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), path);
  }

  const Row& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  bool has(const std::string& column) const { return index_.contains(column); }

  std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::IoError, "missing CSV column '" + name + "'");
    return it->second;
  }

  const std::string& at(std::size_t row, const std::string& name) const {
    return rows_[row][column(name)];
  }

 private:
  Row header_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace deepgreen::csv
