#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "deepgreen/error.hpp"
#include "deepgreen/util/io.hpp"
#include "deepgreen/util/utf8.hpp"

namespace deepgreen::segment {

/// Width folding and whitespace cleanup applied before segmentation:
/// full-width ASCII variants (U+FF01..U+FF5E) map to ASCII, the ideographic
/// space and other Unicode spaces become ' ', Latin capitals are lowered,
/// whitespace runs collapse to one space, and the ends are trimmed.
inline std::u32string normalize32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : utf8::decode(text)) {
    if (c >= 0xFF01 && c <= 0xFF5E) c -= 0xFEE0;
    if (utf8::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c >= U'A' && c <= U'Z') c += 32;
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

inline std::string normalize(std::string_view text) { return utf8::encode(normalize32(text)); }

/// Splits on terminal punctuation. The terminator stays with its sentence;
/// '.' only terminates when followed by whitespace or end of text so that
/// decimal numbers survive.
class SentenceSplitter {
 public:
  SentenceSplitter() : SentenceSplitter(U"。！？；!?;") {}
  explicit SentenceSplitter(std::u32string terminals) : terminals_(std::move(terminals)) {}

  const std::u32string& terminals() const { return terminals_; }

  std::vector<std::string> split(std::string_view text) const {
    const std::u32string cps = utf8::decode(text);
    std::vector<std::string> out;
    std::u32string current;
    auto flush = [&] {
      const std::string s = trim(utf8::encode(current));
      if (!s.empty()) out.push_back(s);
      current.clear();
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
      const char32_t c = cps[i];
      current.push_back(c);
      bool terminal = terminals_.find(c) != std::u32string::npos;
      if (c == U'.' && (i + 1 == cps.size() || utf8::is_space(cps[i + 1]))) terminal = true;
      if (terminal) {
        // Absorb runs like "？！" or closing quotes into the same sentence.
        while (i + 1 < cps.size() && (terminals_.find(cps[i + 1]) != std::u32string::npos ||
                                      cps[i + 1] == U'”' || cps[i + 1] == U'"' || cps[i + 1] == U'）')) {
          current.push_back(cps[++i]);
        }
        flush();
      }
    }
    flush();
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const std::u32string cps = utf8::decode(s);
    std::size_t b = 0, e = cps.size();
    while (b < e && utf8::is_space(cps[b])) ++b;
    while (e > b && utf8::is_space(cps[e - 1])) --e;
    return utf8::encode(cps.substr(b, e - b));
  }

  std::u32string terminals_;
};

class StopwordList {
 public:
  StopwordList() = default;
  StopwordList(const std::vector<std::string>& words, std::string source_id) : source_id_(std::move(source_id)) {
    for (const auto& w : words) {
      std::string n = normalize(w);
      if (!n.empty()) words_.insert(std::move(n));
    }
  }

  /// One token per line, UTF-8.
  static StopwordList load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::DictionaryLoadError, "stopword list not found: " + path.string());
    StopwordList list(io::read_lines(path), path.filename().string());
    if (list.words_.empty()) throw Error(ErrorCode::DictionaryLoadError, "stopword list is empty: " + path.string());
    return list;
  }

  bool contains(std::string_view normalized_token) const { return words_.contains(std::string(normalized_token)); }
  std::size_t size() const { return words_.size(); }
  const std::string& source_id() const { return source_id_; }

 private:
  std::unordered_set<std::string> words_;
  std::string source_id_;
};

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the normalized string
  std::size_t end = 0;
};

/// Word list for maximum-matching segmentation.
class SegmenterDictionary {
 public:
  SegmenterDictionary() = default;
  explicit SegmenterDictionary(const std::vector<std::string>& words, std::string version = "inline") : version_(std::move(version)) {
    for (const auto& w : words) add(w);
  }

  /// Accepts plain word lists and jieba-style "word freq tag" lines; only the
  /// first field is used.
  static SegmenterDictionary load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::DictionaryLoadError, "segmenter dictionary not found: " + path.string());
    SegmenterDictionary d;
    d.version_ = path.filename().string();
    for (const auto& line : io::read_lines(path)) {
      const auto first = line.find_first_of(" \t");
      d.add(line.substr(0, first));
    }
    if (d.words_.empty()) throw Error(ErrorCode::DictionaryLoadError, "segmenter dictionary is empty: " + path.string());
    return d;
  }

  void add(std::string_view word) {
    std::u32string w = normalize32(word);
    if (w.empty()) return;
    max_len_ = std::max(max_len_, w.size());
    words_.insert(std::move(w));
  }

  bool contains(const std::u32string& w) const { return words_.contains(w); }
  std::size_t max_length() const { return max_len_; }
  std::size_t size() const { return words_.size(); }
  const std::string& version() const { return version_; }

 private:
  std::unordered_set<std::u32string> words_;
  std::size_t max_len_ = 0;
  std::string version_;
};

/// Forward maximum matching. At each position the longest dictionary word
/// wins; otherwise an ASCII alphanumeric run (with inner '.', '-', '_')
/// becomes one token, a CJK or other letter becomes a single-character
/// token, and punctuation or spaces are skipped.
inline std::vector<Token> segment_normalized(const std::u32string& text, const SegmenterDictionary& dict) {
  std::vector<Token> tokens;
  std::vector<std::size_t> byte_at(text.size() + 1, 0);
  {
    std::string tmp;
    for (std::size_t i = 0; i < text.size(); ++i) {
      byte_at[i] = tmp.size();
      utf8::append(tmp, text[i]);
    }
    byte_at[text.size()] = tmp.size();
  }
  auto emit = [&](std::size_t b, std::size_t e) {
    tokens.push_back(Token{utf8::encode(std::u32string_view(text).substr(b, e - b)), byte_at[b], byte_at[e]});
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char32_t c = text[i];
    std::size_t best = 0;
    const std::size_t limit = std::min(dict.max_length(), n - i);
    for (std::size_t len = limit; len >= 1; --len) {
      if (dict.contains(text.substr(i, len))) {
        best = len;
        break;
      }
    }
    if (best > 0) {
      // A dictionary hit inside an alphanumeric run would split "iso14001"
      // into pieces; only accept it when it ends on a run boundary.
      const bool inside_run = utf8::is_ascii_alnum(c) && i + best < n && utf8::is_ascii_alnum(text[i + best]) &&
                              utf8::is_ascii_alnum(text[i + best - 1]);
      if (!inside_run) {
        emit(i, i + best);
        i += best;
        continue;
      }
    }
    if (utf8::is_ascii_alnum(c)) {
      std::size_t j = i + 1;
      while (j < n && (utf8::is_ascii_alnum(text[j]) ||
                       ((text[j] == U'.' || text[j] == U'-' || text[j] == U'_') && j + 1 < n &&
                        utf8::is_ascii_alnum(text[j + 1])))) {
        ++j;
      }
      emit(i, j);
      i = j;
    } else if (utf8::is_cjk(c) || utf8::is_other_letter(c)) {
      emit(i, i + 1);
      ++i;
    } else {
      ++i;
    }
  }
  return tokens;
}

inline std::vector<Token> segment_text(std::string_view text, const SegmenterDictionary& dict) {
  return segment_normalized(normalize32(text), dict);
}

/// Normalized, segmented, stopword-filtered token list.
inline std::vector<std::string> tokenize(std::string_view text, const SegmenterDictionary& dict,
                                         const StopwordList& stopwords) {
  std::vector<std::string> out;
  for (auto& t : segment_text(text, dict))
    if (!stopwords.contains(t.text)) out.push_back(std::move(t.text));
  return out;
}

/// Bundles the three text resources every stage needs to agree on.
struct TextAnalyzer {
  SentenceSplitter splitter;
  std::shared_ptr<const SegmenterDictionary> dictionary = std::make_shared<SegmenterDictionary>();
  std::shared_ptr<const StopwordList> stopwords = std::make_shared<StopwordList>();

  std::vector<std::string> sentences(std::string_view text) const { return splitter.split(text); }
  std::vector<Token> words(std::string_view text) const { return segment_text(text, *dictionary); }
  std::vector<std::string> target_words(std::string_view text) const { return tokenize(text, *dictionary, *stopwords); }
};

}  // namespace deepgreen::segment
