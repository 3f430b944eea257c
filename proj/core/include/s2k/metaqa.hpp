#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/corpus.hpp"
#include "s2k/inference.hpp"

namespace s2k {

struct MetaQuestion {
  std::string question_id;
  std::string chunk_id;
  std::string question;
  std::string generator_model;
};

/// Reply that parsed but must not be stored.
struct Filtered {
  std::string reason;
};

/// Context-dependent phrases a stored question may not contain
/// (compared case-insensitively).
const std::vector<std::string>& banned_question_phrases();

PromptContext build_meta_prompt(const DocumentChunk& chunk);

/// Extracts the first balanced `{...}` object that parses as JSON and has a
/// string "question" field; code fences and surrounding prose are ignored.
/// Throws UnparseableResponse when there is none. The returned
/// MetaQuestion carries only the question text.
std::variant<MetaQuestion, Filtered> parse_question_response(const std::string& raw);

struct MetaQaOptions {
  /// Additional attempts after an unparseable reply.
  int max_retries = 2;
  DecodeParams decode{.greedy = false, .temperature = 0.7, .seed = 0, .max_tokens = 256, .top_logprobs = 5};
};

struct MetaQaOutcome {
  std::optional<MetaQuestion> question;
  /// Set when the chunk produced no stored question.
  std::string dropped_reason;
  int attempts = 0;
};

/// Generates, parses and screens one question for `chunk`.
MetaQaOutcome generate_meta_question(const DocumentChunk& chunk, const Backend& backend,
                                     const MetaQaOptions& options = {});

nlohmann::json to_json(const MetaQuestion& q);
MetaQuestion meta_question_from_json(const nlohmann::json& j);

}  // namespace s2k
