#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace s2k {

/// Tokenizer shared by chunk budgeting and every inference backend of a run.
/// Implementations must be deterministic and thread-safe.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  /// Stable identifier recorded in manifests; fusion and export reject
  /// artifacts produced under a different id.
  virtual std::string id() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(const std::vector<std::string>& pieces) const = 0;
  virtual std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

/// Word/punctuation tokenizer: runs of letters, digits and non-ASCII code
/// points form one token (inner apostrophes and hyphens kept), every other
/// visible character is a token of its own. Whitespace is discarded.
class WordTokenizer final : public Tokenizer {
 public:
  std::string id() const override { return "s2k-word-v1"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string detokenize(const std::vector<std::string>& pieces) const override;
  std::size_t count(std::string_view text) const override;
};

/// Half-open byte range into a text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  /// Sentence spans in order; spans exclude surrounding whitespace and
  /// never overlap.
  virtual std::vector<Span> split(std::string_view text) const = 0;
};

/// Splits after `.`, `?`, `!` followed by whitespace (or end of text), after
/// the full-width terminators `。？！`, and at blank lines. A `.` ending one
/// of the guarded abbreviations does not end a sentence.
class RuleSentenceSplitter final : public SentenceSplitter {
 public:
  RuleSentenceSplitter();
  explicit RuleSentenceSplitter(std::vector<std::string> abbreviations);
  std::vector<Span> split(std::string_view text) const override;

  static std::vector<std::string> default_abbreviations();

 private:
  bool guarded(std::string_view text, std::size_t dot) const;
  std::vector<std::string> abbreviations_;
};

namespace text {

/// Byte length of the UTF-8 sequence starting with `lead` (1 for invalid bytes).
std::size_t utf8_length(unsigned char lead);
bool is_space(char c);
std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace text
}  // namespace s2k
