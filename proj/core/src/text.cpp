#include "s2k/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace s2k {
namespace text {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return to_lower_ascii(haystack).find(to_lower_ascii(needle)) != std::string::npos;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace text

namespace {

// Full-width terminators: 。 ？ ！
constexpr std::array<std::string_view, 3> kWideTerminators = {"\xE3\x80\x82", "\xEF\xBC\x9F",
                                                              "\xEF\xBC\x81"};

bool is_wide_terminator(std::string_view s, std::size_t i) {
  for (auto t : kWideTerminators) {
    if (s.substr(i, t.size()) == t) return true;
  }
  return false;
}

bool is_word_byte(std::string_view s, std::size_t i) {
  auto c = static_cast<unsigned char>(s[i]);
  if (c >= 0x80) return !is_wide_terminator(s, i);
  return std::isalnum(c) || c == '_';
}

}  // namespace

std::vector<std::string> WordTokenizer::tokenize(std::string_view s) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (text::is_space(s[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_word_byte(s, i)) {
      while (i < s.size()) {
        if (is_word_byte(s, i)) {
          i += text::utf8_length(static_cast<unsigned char>(s[i]));
        } else if ((s[i] == '\'' || s[i] == '-') && i + 1 < s.size() && is_word_byte(s, i + 1)) {
          ++i;
        } else {
          break;
        }
      }
    } else {
      i += text::utf8_length(static_cast<unsigned char>(s[i]));
    }
    i = std::min(i, s.size());
    out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::size_t WordTokenizer::count(std::string_view text) const { return tokenize(text).size(); }

std::string WordTokenizer::detokenize(const std::vector<std::string>& pieces) const {
  static constexpr std::string_view kNoSpaceBefore = ".,;:!?)]}%";
  static constexpr std::string_view kNoSpaceAfter = "([{";
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    if (p.empty()) continue;
    bool glue = out.empty() || (p.size() == 1 && kNoSpaceBefore.find(p[0]) != std::string_view::npos) ||
                is_wide_terminator(p, 0) ||
                kNoSpaceAfter.find(out.back()) != std::string_view::npos;
    if (!glue) out += ' ';
    out += p;
  }
  return out;
}

std::vector<std::string> RuleSentenceSplitter::default_abbreviations() {
  return {"e.g.", "i.e.", "etc.", "vs.", "cf.", "al.", "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.",
          "Fig.", "Figs.", "No.", "Vol.", "approx.", "Inc.", "Ltd.", "Co.", "Jr.", "Sr."};
}

RuleSentenceSplitter::RuleSentenceSplitter() : abbreviations_(default_abbreviations()) {}

RuleSentenceSplitter::RuleSentenceSplitter(std::vector<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

bool RuleSentenceSplitter::guarded(std::string_view s, std::size_t dot) const {
  // Word ending at `dot` (inclusive), preceded by whitespace or start.
  std::size_t start = dot;
  while (start > 0 && !text::is_space(s[start - 1])) --start;
  auto word = s.substr(start, dot + 1 - start);
  for (const auto& a : abbreviations_) {
    if (word.size() >= a.size() && word.substr(word.size() - a.size()) == a) {
      // Only a full-word match counts ("(e.g." matches, "see.g." does not).
      std::size_t lead = word.size() - a.size();
      if (lead == 0 || !std::isalnum(static_cast<unsigned char>(word[lead - 1]))) return true;
    }
  }
  return false;
}

std::vector<Span> RuleSentenceSplitter::split(std::string_view s) const {
  std::vector<Span> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && text::is_space(s[b])) ++b;
    while (e > b && text::is_space(s[e - 1])) --e;
    if (b < e) out.push_back({b, e});
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '.' || c == '?' || c == '!') {
      std::size_t j = i + 1;
      // Closing quotes/brackets stay with the sentence.
      while (j < s.size() && (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']')) ++j;
      if ((j == s.size() || text::is_space(s[j])) && !(c == '.' && guarded(s, i))) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    if (static_cast<unsigned char>(c) >= 0x80 && is_wide_terminator(s, i)) {
      i += 3;
      emit(start, i);
      start = i;
      continue;
    }
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
      if (j < s.size() && s[j] == '\n') {
        emit(start, i);
        start = j;
        i = j;
        continue;
      }
    }
    ++i;
  }
  emit(start, s.size());
  return out;
}

}  // namespace s2k
