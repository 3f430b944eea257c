#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace s2k {

/// k generations for one question. A missing answer (nullopt) is the
/// distinct "unextractable" value: never correct, but it can win a vote.
struct GenerationSet {
  std::string question_id;
  std::vector<std::optional<std::string>> answers;
  std::string gold;

  bool correct(std::size_t j) const;
  /// Most frequent answer; ties go to the one generated first.
  std::optional<std::string> majority() const;
};

/// All three throw EmptyInput on no sets and PreconditionError when k
/// differs between sets or is 0.
double avg_at_k(const std::vector<GenerationSet>& sets);
double cons_at_k(const std::vector<GenerationSet>& sets);
double pass_at_k(const std::vector<GenerationSet>& sets);

struct EvalReport {
  double avg_at_k = 0;
  double cons_at_k = 0;
  double pass_at_k = 0;
  std::size_t n_questions = 0;
  std::size_t k = 0;
};

EvalReport evaluate(const std::vector<GenerationSet>& sets);
nlohmann::json to_json(const EvalReport& r);

/// Reads `{question_id, gold, answers:[...]}` or `{question_id, gold,
/// texts:[...]}` lines; answers are normalized, texts go through the
/// reward extractor. Only the first k generations are kept; a line with
/// fewer than k is a SchemaError.
std::vector<GenerationSet> generation_sets_from_jsonl(const std::vector<nlohmann::json>& lines, std::size_t k);

}  // namespace s2k
