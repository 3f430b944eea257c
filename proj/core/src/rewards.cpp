#include "s2k/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "s2k/text.hpp"

namespace s2k {

namespace {

bool is_edge_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string_view strip_edges(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && is_edge_punct(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_edge_punct(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return text::trim(s);
}

bool is_option_letter(char c) {
  c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return c >= 'A' && c <= 'E';
}

// "A", "a, c", "(B) and (D)", "A/B" -> sorted letters.
std::optional<std::string> letter_set(std::string_view s) {
  std::set<char> letters;
  std::string word;
  auto flush = [&]() -> bool {
    if (word.empty()) return true;
    bool ok = false;
    if (word.size() == 1 && is_option_letter(word[0])) {
      letters.insert(static_cast<char>(std::toupper(static_cast<unsigned char>(word[0]))));
      ok = true;
    } else if (word == "and" || word == "AND") {
      ok = true;
    }
    word.clear();
    return ok;
  };
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += c;
    } else if (c == ',' || c == ';' || c == '/' || c == '&' || c == '(' || c == ')' || c == '.' ||
               text::is_space(c)) {
      if (!flush()) return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  if (!flush() || letters.empty()) return std::nullopt;
  return std::string(letters.begin(), letters.end());
}

}  // namespace

std::optional<std::string> normalize_answer(std::string_view raw) {
  auto s = text::trim(raw);
  while (!s.empty() && (s.front() == '*' || s.front() == ':')) s = text::trim(s.substr(1));
  if (auto set = letter_set(s)) return set;
  // "B. explanation" or "(B) explanation": a leading option label wins.
  auto lead = s;
  if (!lead.empty() && lead.front() == '(') lead.remove_prefix(1);
  if (lead.size() >= 2 && is_option_letter(lead[0]) && (lead[1] == '.' || lead[1] == ')' || lead[1] == ':'))
    return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(lead[0]))));

  auto core = strip_edges(s);
  if (core.empty()) return std::nullopt;
  std::string out;
  bool space = false;
  for (char c : core) {
    if (text::is_space(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<std::string> extract_answer(std::string_view text) {
  auto pos = text.rfind(kAnswerMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  auto tail = text.substr(pos + kAnswerMarker.size());
  auto eol = tail.find('\n');
  if (eol != std::string_view::npos) tail = tail.substr(0, eol);
  tail = text::trim(tail);
  while (!tail.empty() && (tail.front() == ':' || tail.front() == '*' || tail.front() == '-'))
    tail = text::trim(tail.substr(1));
  return normalize_answer(tail);
}

double format_reward(std::string_view text) {
  if (text::count_occurrences(text, kAnswerMarker) >= 2) return -0.5;
  static constexpr std::string_view kOpen = "<think>", kClose = "</think>";
  auto body = text::trim(text);
  if (body.substr(0, kOpen.size()) != kOpen) return 0.0;
  if (text::count_occurrences(text, kOpen) != 1 || text::count_occurrences(text, kClose) != 1) return 0.0;
  auto close = body.find(kClose);
  auto tail = body.substr(close + kClose.size());
  return text::count_occurrences(tail, kAnswerMarker) == 1 ? 1.0 : 0.0;
}

double accuracy_reward(std::string_view text, std::string_view gold) {
  auto got = extract_answer(text);
  auto want = normalize_answer(gold);
  return got && want && *got == *want ? 5.0 : 0.0;
}

RewardBreakdown total_reward(std::string_view text, std::string_view gold) {
  RewardBreakdown r;
  r.extracted = extract_answer(text);
  auto want = normalize_answer(gold);
  r.acc = r.extracted && want && *r.extracted == *want ? 5.0 : 0.0;
  r.fmt = format_reward(text);
  r.total = r.acc + r.fmt;
  return r;
}

nlohmann::json to_json(const RewardBreakdown& r) {
  return {{"acc", r.acc},
          {"fmt", r.fmt},
          {"total", r.total},
          {"extracted", r.extracted ? nlohmann::json(*r.extracted) : nlohmann::json(nullptr)}};
}

}  // namespace s2k
