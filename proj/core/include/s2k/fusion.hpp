#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/corpus.hpp"
#include "s2k/error.hpp"
#include "s2k/inference.hpp"
#include "s2k/metaqa.hpp"

namespace s2k {

struct FusionConfig {
  /// Tokens proposed per step.
  std::size_t window = 10;
  /// Bias toward the document-conditioned proposal, in nats per token.
  /// May be negative or infinite.
  double margin = 0.07;
  /// Cap on fused answer length in tokens.
  std::size_t max_length = 512;

  /// Throws ConfigError unless window >= 1 and max_length >= window.
  void validate() const;
};

enum class KnowledgeSource { internal, external };

std::string_view to_string(KnowledgeSource s);

/// Window selection rule: internal iff mean_internal >= mean_external + margin.
/// Equality keeps the internal proposal.
KnowledgeSource decide_window(double mean_internal, double mean_external, double margin);

struct SegmentChoice {
  KnowledgeSource source = KnowledgeSource::external;
  std::vector<TokenId> tokens;
  std::string text;
  double p_internal = 0;
  double p_external = 0;
  double margin_used = 0;
};

enum class Termination { eos, length_cap };

struct FusionTrace {
  std::string question_id;
  std::string chunk_id;
  std::string question;
  std::string answer_text;
  std::vector<SegmentChoice> segments;
  double internal_fraction = 0;
  Termination terminated_by = Termination::length_cap;

  std::vector<TokenId> tokens() const;
};

/// Raised when the backend fails mid-answer; carries the segments fused so far.
class FusionInterrupted : public Error {
 public:
  FusionInterrupted(const std::string& what, FusionTrace partial)
      : Error("FusionInterrupted", what), partial_(std::move(partial)) {}
  const FusionTrace& partial() const { return partial_; }

 private:
  FusionTrace partial_;
};

/// The two prompts of one fusion step. They differ only in the external
/// context's leading document segment.
PromptContext internal_context(const std::string& question, const std::string& answer_prefix);
PromptContext external_context(const std::string& question, const std::string& document,
                               const std::string& answer_prefix);

struct FusionOptions {
  DecodeParams decode{};
  /// Called before every step with (internal, external) contexts.
  std::function<void(const PromptContext&, const PromptContext&)> on_step;
};

/// Alternates window proposals from the internal and external contexts and
/// keeps one per step until EOS or the length cap. Each proposal is scored
/// by its mean log-probability under its own context.
FusionTrace fuse_answer(const MetaQuestion& q, const DocumentChunk& d, const FusionConfig& cfg,
                        const Backend& backend, const FusionOptions& options = {});

struct FusionFailure {
  std::string question_id;
  std::string error;
};

struct FusionSummary {
  std::size_t traces = 0;
  std::size_t skipped = 0;
  std::vector<FusionFailure> failures;
  /// Mean internal fraction over this call's traces; absent when none.
  std::optional<double> internal_fraction_mean;
};

/// Fuses every question not in `done`, passing each trace to `sink` in input
/// order. A failing item is recorded and the run continues. Throws
/// PreconditionError when a question names an unknown chunk.
FusionSummary fuse_corpus(const std::vector<MetaQuestion>& questions, const std::vector<DocumentChunk>& chunks,
                          const FusionConfig& cfg, const Backend& backend,
                          const std::function<void(const FusionTrace&)>& sink,
                          const std::set<std::string>& done = {}, const FusionOptions& options = {});

nlohmann::json to_json(const FusionTrace& t);
FusionTrace fusion_trace_from_json(const nlohmann::json& j);

}  // namespace s2k
