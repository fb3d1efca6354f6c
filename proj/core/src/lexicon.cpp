#include "stepwise/lexicon.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "stepwise/config.hpp"
#include "stepwise/errors.hpp"

namespace stepwise {
namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

// Lower-cases ASCII, maps U+2018/U+2019 to '\'' and collapses whitespace.
std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x98 || static_cast<unsigned char>(s[i + 2]) == 0x99)) {
      out.push_back('\'');
      in_space = false;
      i += 2;
      continue;
    }
    if (std::isspace(c) != 0) {
      if (!in_space) out.push_back(' ');
      in_space = true;
      continue;
    }
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return std::string(s.substr(b, e - b));
}

bool contains_bounded(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  std::size_t pos = haystack.find(needle);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_byte(static_cast<unsigned char>(haystack[pos - 1])) ||
                         !is_word_byte(static_cast<unsigned char>(needle.front()));
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == haystack.size() ||
                          !is_word_byte(static_cast<unsigned char>(haystack[end])) ||
                          !is_word_byte(static_cast<unsigned char>(needle.back()));
    if (left_ok && right_ok) return true;
    pos = haystack.find(needle, pos + 1);
  }
  return false;
}

}  // namespace

const std::vector<std::string>& default_hesitation_phrases() {
  static const std::vector<std::string> phrases = {
      "wait",
      "hmm",
      "debatable",
      "maybe",
      "perhaps",
      "could be",
      "might be",
      "possibly",
      "on the other hand",
      "alternatively",
      "another possibility",
      "or perhaps",
      "actually",
      "now that I think about it",
      "I think I made a mistake",
      "let me reconsider",
      "not sure",
      "I'm not entirely sure",
      "this might be wrong",
      "I could be mistaken",
      "unless I'm wrong",
  };
  return phrases;
}

HesitationLexicon::HesitationLexicon() : HesitationLexicon(default_hesitation_phrases()) {}

HesitationLexicon::HesitationLexicon(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {
  normalized_.reserve(phrases_.size());
  for (const auto& p : phrases_) normalized_.push_back(normalize(trim(p)));
}

HesitationLexicon HesitationLexicon::parse(std::string_view text) {
  std::vector<std::string> phrases;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto phrase = trim(line);
    if (!phrase.empty()) phrases.push_back(std::move(phrase));
  }
  return HesitationLexicon(std::move(phrases));
}

HesitationLexicon HesitationLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RangeError("lexicon", "cannot open lexicon file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool HesitationLexicon::matches(std::string_view text) const {
  const auto haystack = normalize(text);
  for (const auto& needle : normalized_) {
    if (contains_bounded(haystack, needle)) return true;
  }
  return false;
}

std::vector<std::string> HesitationLexicon::find_all(std::string_view text) const {
  const auto haystack = normalize(text);
  std::vector<std::string> found;
  for (std::size_t i = 0; i < normalized_.size(); ++i) {
    if (contains_bounded(haystack, normalized_[i])) found.push_back(phrases_[i]);
  }
  return found;
}

bool detect_hesitation(std::string_view text, const HesitationLexicon& lexicon) {
  return lexicon.matches(text);
}

}  // namespace stepwise
