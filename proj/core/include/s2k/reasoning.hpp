#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/bm25.hpp"
#include "s2k/corpus.hpp"
#include "s2k/inference.hpp"
#include "s2k/metaqa.hpp"

namespace s2k {

enum class ReasoningType { deductive, inductive, case_based };

std::string_view to_string(ReasoningType t);
/// Accepts "deductive", "inductive", "case", "case_based", "case-based".
/// Throws UnknownReasoningType otherwise.
ReasoningType parse_reasoning_type(std::string_view name);

struct QuestionChunkPair {
  std::string question_id;
  std::string chunk_id;
  std::string question;
  std::string chunk;

  /// Text indexed for retrieval: question followed by chunk.
  std::string indexed_text() const { return question + "\n" + chunk; }
};

/// Joins questions with their chunks. Throws PreconditionError for a
/// question whose chunk is missing.
std::vector<QuestionChunkPair> make_pairs(const std::vector<MetaQuestion>& questions,
                                          const std::vector<DocumentChunk>& chunks);

Bm25Index build_pair_index(const std::vector<QuestionChunkPair>& pairs, Bm25Params params = {});

struct ReasoningQA {
  std::string qa_id;
  ReasoningType type = ReasoningType::deductive;
  std::vector<std::string> source_pair_ids;
  std::string question;
  /// Letters A-D for multiple-choice types; empty for case-based.
  std::map<char, std::string> options;
  std::string gold;
};

/// Numbered "N. question (Text: chunk)" block used by every reasoning prompt.
std::string format_input_block(const std::vector<QuestionChunkPair>& pairs);

/// Throws PreconditionError unless 1 <= pairs.size() <= 10.
PromptContext build_reasoning_prompt(ReasoningType type, const std::vector<QuestionChunkPair>& pairs);

/// Parses a generated item. Multiple-choice types need line-anchored
/// `A.`..`D.` options and a final `Correct Answer: <letter>`; case-based
/// needs a stem and a non-empty `Correct Answer:` text. Throws
/// MalformedGeneration otherwise. Ids are left empty.
ReasoningQA parse_reasoning_response(ReasoningType type, const std::string& raw);

enum class SamplingMode { relevance, random };

struct ReasoningOptions {
  std::size_t k = 10;
  std::vector<ReasoningType> types = {ReasoningType::deductive, ReasoningType::inductive, ReasoningType::case_based};
  /// Maximum items per type; missing types are unlimited.
  std::map<ReasoningType, std::size_t> quota;
  SamplingMode sampling = SamplingMode::relevance;
  std::uint64_t seed = 0;
  /// Seeds used, in pair order; 0 means all pairs.
  std::size_t max_seeds = 0;
  int max_retries = 2;
  DecodeParams decode{.greedy = false, .temperature = 0.7, .seed = 0, .max_tokens = 768, .top_logprobs = 5};
};

struct ReasoningFailure {
  std::string seed_id;
  ReasoningType type = ReasoningType::deductive;
  std::string error;
};

struct ReasoningSeedResult {
  std::string seed_id;
  std::vector<ScoredPair> retrieved;
  std::vector<ReasoningQA> items;
  std::vector<ReasoningFailure> failures;
};

/// Pairs sampled for one seed: BM25 top-k (seed excluded) or, in random
/// mode, k pairs drawn without replacement from a generator keyed by
/// (options.seed, seed id).
std::vector<ScoredPair> sample_pairs(const QuestionChunkPair& seed, const std::vector<QuestionChunkPair>& pairs,
                                     const Bm25Index& index, const ReasoningOptions& options);

/// One seed: sample, then one generation per type whose quota is not yet
/// used up (`used` is updated).
ReasoningSeedResult generate_for_seed(const QuestionChunkPair& seed, const std::vector<QuestionChunkPair>& pairs,
                                      const Bm25Index& index, const Backend& backend,
                                      const ReasoningOptions& options, std::map<ReasoningType, std::size_t>& used);

/// Runs every seed in order.
std::vector<ReasoningSeedResult> generate_reasoning_set(const std::vector<QuestionChunkPair>& pairs,
                                                        const Bm25Index& index, const Backend& backend,
                                                        const ReasoningOptions& options);

nlohmann::json to_json(const ReasoningQA& qa);
ReasoningQA reasoning_qa_from_json(const nlohmann::json& j);

}  // namespace s2k
