#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stepwise {

/// Compiled hesitation phrase set. Matching is ASCII case-insensitive,
/// collapses whitespace runs, treats typographic apostrophes as "'", and
/// requires a word boundary on both ends of each phrase.
class HesitationLexicon {
 public:
  HesitationLexicon();  // default phrase list
  explicit HesitationLexicon(std::vector<std::string> phrases);

  /// Plain text, one phrase per line, '#' starts a comment.
  static HesitationLexicon parse(std::string_view text);
  static HesitationLexicon load(const std::string& path);

  const std::vector<std::string>& phrases() const noexcept { return phrases_; }
  bool empty() const noexcept { return phrases_.empty(); }

  bool matches(std::string_view text) const;
  /// Every phrase occurring in `text`, in lexicon order.
  std::vector<std::string> find_all(std::string_view text) const;

 private:
  std::vector<std::string> phrases_;
  std::vector<std::string> normalized_;
};

bool detect_hesitation(std::string_view text, const HesitationLexicon& lexicon);

}  // namespace stepwise
