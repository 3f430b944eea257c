#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/inference.hpp"

namespace s2k {

/// -Σ p ln p over a next-token distribution, with 0 ln 0 = 0.
///
/// Full coverage must sum to 1 within 1e-6 (NormalizationError otherwise).
/// Top-k coverage needs `accept_truncated`; the missing mass is lumped
/// into one extra outcome, which makes the result a lower bound.
double entropy(const TokenDistribution& dist, bool accept_truncated = false);

/// ω = (1 - correct) + correct · H / ln V, with H clamped to [0, ln V].
double weight(bool correct, double h, std::size_t vocab_size);

struct TokenWeightRecord {
  std::size_t position = 0;
  TokenId target = 0;
  TokenId argmax = 0;
  bool correct = false;
  double h = 0;
  double h_norm = 0;
  double omega = 0;
  double nll = 0;
};

/// One record for a target under `dist`. A target with zero probability
/// gets the NLL of the smallest normal double rather than infinity.
TokenWeightRecord make_record(std::size_t position, const TokenDistribution& dist, TokenId target,
                              bool accept_truncated = false);

struct WeightedExample {
  std::string example_id;
  std::string prompt;
  std::string answer;
  std::vector<TokenId> answer_tokens;
  std::vector<std::string> token_texts;
  std::string tokenizer_id;
  bool truncated = false;
  std::vector<TokenWeightRecord> records;
  double loss_ref = 0;

  double unweighted_loss() const;
};

/// (1/N) Σ ω·nll over the records, N = records.size(); 0 when empty.
double weighted_loss(const std::vector<TokenWeightRecord>& records);

/// Builds records from already-scored distributions (one per target).
WeightedExample annotate_distributions(std::string example_id, std::string prompt,
                                       const std::vector<TokenId>& targets,
                                       const std::vector<TokenDistribution>& dists, bool accept_truncated = false);

struct AnnotateOptions {
  /// Score the end-of-sequence token after the answer.
  bool append_eos = true;
  /// Allow top-k distributions (entropy lower bound).
  bool accept_truncated = false;
};

/// Teacher-forces `answer` after `prompt` and weights every answer token.
/// Throws UnsupportedCapability when the backend cannot teacher-force, or
/// when it only returns top-k distributions and truncation is not accepted.
WeightedExample annotate_example(std::string example_id, const PromptContext& prompt, const std::string& answer,
                                 const Backend& backend, const AnnotateOptions& options = {});

nlohmann::json to_json(const WeightedExample& ex);
/// Inverse of to_json. Argmax ids are not exported; a record reads back
/// with argmax = target when correct and -1 otherwise.
WeightedExample weighted_example_from_json(const nlohmann::json& j);

struct ExportInfo {
  std::string config_hash;
  nlohmann::json backend = nlohmann::json::object();
};

/// Writes one JSONL line per example to `path` and its manifest to
/// `path + ".manifest.json"`; both atomically. Returns the manifest.
/// Throws SchemaError when examples disagree on tokenizer id or have
/// misaligned records.
nlohmann::json export_weighted_dataset(const std::vector<WeightedExample>& examples, const std::string& path,
                                       const ExportInfo& info);

}  // namespace s2k
