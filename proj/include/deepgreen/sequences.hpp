#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "deepgreen/corpus.hpp"
#include "deepgreen/dictionary.hpp"
#include "deepgreen/segment.hpp"
#include "deepgreen/util/hash.hpp"

namespace deepgreen::segment {

struct Provenance {
  std::string firm_id;
  int year = 0;
  std::size_t sentence_index = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// S1: corpus-wide unique target words in first-occurrence order.
struct UniqueWordSequence {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::vector<Provenance>> provenance;

  nlohmann::json to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& w : words) {
      auto prov = nlohmann::json::array();
      for (const auto& p : provenance.at(w)) prov.push_back({p.firm_id, p.year, p.sentence_index});
      arr.push_back({{"word", w}, {"provenance", prov}});
    }
    return arr;
  }

  static UniqueWordSequence from_json(const nlohmann::json& j) {
    UniqueWordSequence s;
    for (const auto& e : j) {
      const auto w = e.at("word").get<std::string>();
      s.words.push_back(w);
      auto& prov = s.provenance[w];
      for (const auto& p : e.at("provenance"))
        prov.push_back(Provenance{p.at(0).get<std::string>(), p.at(1).get<int>(), p.at(2).get<std::size_t>()});
    }
    return s;
  }
};

inline std::vector<corpus::EnvSection> sorted_sections(std::vector<corpus::EnvSection> sections) {
  std::stable_sort(sections.begin(), sections.end(), [](const auto& a, const auto& b) {
    return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year);
  });
  return sections;
}

/// Sections are visited in (firm_id, year) order so the result does not
/// depend on input order.
inline UniqueWordSequence build_s1(const std::vector<corpus::EnvSection>& sections, const TextAnalyzer& analyzer) {
  UniqueWordSequence s1;
  for (const auto& section : sorted_sections(sections)) {
    const auto sentences = analyzer.sentences(section.text);
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      for (auto& token : analyzer.target_words(sentences[si])) {
        auto [it, inserted] = s1.provenance.try_emplace(token);
        if (inserted) s1.words.push_back(token);
        Provenance p{section.firm_id, section.year, si};
        if (it->second.empty() || !(it->second.back() == p)) it->second.push_back(std::move(p));
      }
    }
  }
  return s1;
}

/// One element of S2: a dictionary keyword and its sentence with that one
/// occurrence wrapped in "##".
struct KeywordContextPair {
  std::string keyword;
  std::string sentence;
  std::string firm_id;
  int year = 0;
  std::size_t sentence_index = 0;
  std::size_t occurrence = 0;  // token index of the keyword inside the sentence
  std::string pair_id;

  /// The sentence with the markers removed.
  std::string plain_sentence() const {
    std::string out = sentence;
    for (int k = 0; k < 2; ++k) {
      const auto pos = out.find("##");
      if (pos != std::string::npos) out.erase(pos, 2);
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const KeywordContextPair& p) {
  j = nlohmann::json{{"pair_id", p.pair_id},     {"keyword", p.keyword},
                     {"sentence", p.sentence},   {"firm_id", p.firm_id},
                     {"year", p.year},           {"sentence_index", p.sentence_index},
                     {"occurrence", p.occurrence}};
}

inline void from_json(const nlohmann::json& j, KeywordContextPair& p) {
  j.at("pair_id").get_to(p.pair_id);
  j.at("keyword").get_to(p.keyword);
  j.at("sentence").get_to(p.sentence);
  j.at("firm_id").get_to(p.firm_id);
  j.at("year").get_to(p.year);
  p.sentence_index = j.value("sentence_index", std::size_t{0});
  p.occurrence = j.value("occurrence", std::size_t{0});
}

inline std::string make_pair_id(const std::string& firm_id, int year, std::size_t sentence_index,
                                std::size_t occurrence, const std::string& keyword) {
  return hash_hex(firm_id + '\x1f' + std::to_string(year) + '\x1f' + std::to_string(sentence_index) + '\x1f' +
                  std::to_string(occurrence) + '\x1f' + keyword);
}

/// Normalized sentence text as used inside S2 pairs; '#' is removed so the
/// only "##" left after marking is the keyword's.
inline std::string pair_sentence_text(const std::string& raw_sentence) {
  std::string s = normalize(raw_sentence);
  s.erase(std::remove(s.begin(), s.end(), '#'), s.end());
  return s;
}

/// One pair per keyword occurrence. The segmenter dictionary is extended
/// with the green words so each keyword comes out as a single token.
inline std::vector<KeywordContextPair> build_s2(const std::vector<corpus::EnvSection>& sections,
                                                const GreenDictionary& dictionary, const TextAnalyzer& analyzer) {
  std::vector<KeywordContextPair> pairs;
  if (dictionary.empty()) return pairs;
  SegmenterDictionary extended = *analyzer.dictionary;
  for (const auto& e : dictionary.entries()) extended.add(e.word);

  for (const auto& section : sorted_sections(sections)) {
    const auto sentences = analyzer.sentences(section.text);
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      const std::string text = pair_sentence_text(sentences[si]);
      const auto tokens = segment_text(text, extended);
      for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
        const auto& tok = tokens[ti];
        if (!dictionary.contains(tok.text)) continue;
        KeywordContextPair p;
        p.keyword = tok.text;
        p.sentence = text.substr(0, tok.begin) + "##" + tok.text + "##" + text.substr(tok.end);
        p.firm_id = section.firm_id;
        p.year = section.year;
        p.sentence_index = si;
        p.occurrence = ti;
        p.pair_id = make_pair_id(p.firm_id, p.year, si, ti, p.keyword);
        pairs.push_back(std::move(p));
      }
    }
  }
  return pairs;
}

/// Normalized sentences per firm-year, for the extended-context arm.
class ContextIndex {
 public:
  ContextIndex() = default;
  ContextIndex(const std::vector<corpus::EnvSection>& sections, const TextAnalyzer& analyzer) {
    for (const auto& s : sections) {
      auto& out = sentences_[{s.firm_id, s.year}];
      for (const auto& raw : analyzer.sentences(s.text)) out.push_back(pair_sentence_text(raw));
    }
  }

  /// Up to `window` sentences before and after the pair's sentence.
  std::pair<std::vector<std::string>, std::vector<std::string>> neighbors(const KeywordContextPair& p,
                                                                          std::size_t window) const {
    std::vector<std::string> before, after;
    auto it = sentences_.find({p.firm_id, p.year});
    if (it == sentences_.end()) return {before, after};
    const auto& s = it->second;
    const std::size_t lo = p.sentence_index >= window ? p.sentence_index - window : 0;
    for (std::size_t i = lo; i < p.sentence_index && i < s.size(); ++i) before.push_back(s[i]);
    for (std::size_t i = p.sentence_index + 1; i <= p.sentence_index + window && i < s.size(); ++i) after.push_back(s[i]);
    return {before, after};
  }

  bool empty() const { return sentences_.empty(); }

 private:
  std::map<std::pair<std::string, int>, std::vector<std::string>> sentences_;
};

}  // namespace deepgreen::segment
