#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace s2k {

inline constexpr std::string_view kAnswerMarker = "ANSWER";

/// Canonical answer form shared by rewards and metrics.
///
/// Option-letter answers ("d", "(B)", "A, C", "B. because ...") become
/// their sorted distinct uppercase letters ("D", "B", "AC", "B"). Anything
/// else is trimmed, stripped of edge punctuation, whitespace-collapsed and
/// ASCII-lowercased. Returns nullopt when nothing is left.
std::optional<std::string> normalize_answer(std::string_view raw);

/// Text after the last `ANSWER` marker up to the end of that line,
/// normalized. nullopt when there is no marker or nothing after it.
std::optional<std::string> extract_answer(std::string_view text);

/// +1 for `<think>…</think>` first and exactly one marker after it, -0.5
/// when the marker occurs twice or more anywhere, 0 otherwise.
double format_reward(std::string_view text);

/// 5 when the extracted answer equals the normalized gold, else 0.
double accuracy_reward(std::string_view text, std::string_view gold);

struct RewardBreakdown {
  double acc = 0;
  double fmt = 0;
  double total = 0;
  std::optional<std::string> extracted;
};

RewardBreakdown total_reward(std::string_view text, std::string_view gold);

/// `{acc, fmt, total, extracted}`; extracted is null when unextractable.
nlohmann::json to_json(const RewardBreakdown& r);

}  // namespace s2k
