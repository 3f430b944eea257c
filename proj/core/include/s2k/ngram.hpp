#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/inference.hpp"

namespace s2k {

/// Order-2 (bigram) model with add-one smoothing:
///
///   P(w | h) = (c(h, w) + 1) / (c(h) + V)
///
/// where V counts every vocabulary entry including EOS and `<unk>`. Each
/// training sequence is wrapped as EOS t1 ... tn EOS, so EOS doubles as the
/// start-of-sequence history.
class BigramCounts {
 public:
  BigramCounts() = default;
  explicit BigramCounts(std::size_t vocab_size) : successors_(vocab_size), totals_(vocab_size, 0) {}

  static BigramCounts from_successors(std::vector<std::vector<std::pair<TokenId, std::uint32_t>>> succ);

  void add_sequence(const std::vector<TokenId>& ids);
  std::uint64_t count(TokenId h, TokenId w) const;
  std::uint64_t total(TokenId h) const { return totals_[static_cast<std::size_t>(h)]; }
  const std::vector<std::pair<TokenId, std::uint32_t>>& successors(TokenId h) const {
    return successors_[static_cast<std::size_t>(h)];
  }
  std::size_t vocab_size() const { return totals_.size(); }
  bool empty() const;

  /// Writes the add-one distribution after `h` into `out` (size V).
  void smoothed(TokenId h, std::vector<double>& out) const;

 private:
  // Per history, successor ids in ascending order with their counts.
  std::vector<std::vector<std::pair<TokenId, std::uint32_t>>> successors_;
  std::vector<std::uint64_t> totals_;
};

class NgramModel {
 public:
  /// Builds vocabulary and counts from tokenized training sequences.
  static NgramModel train(const std::vector<std::vector<std::string>>& sequences);

  const Vocabulary& vocab() const { return vocab_; }
  const BigramCounts& counts() const { return counts_; }
  std::vector<TokenId> ids(const std::vector<std::string>& tokens) const;

  /// Counts-only serialization, enough to rebuild identical distributions.
  nlohmann::json to_json() const;
  static NgramModel from_json(const nlohmann::json& j);

 private:
  Vocabulary vocab_;
  BigramCounts counts_;
};

struct NgramBackendOptions {
  /// Weight of the in-context cache model built from the prompt's user
  /// text; 0 turns the cache off and the backend reduces to the plain
  /// bigram model.
  double cache_weight = 0.5;
  std::size_t context_limit = 0;
  std::string model_name = "bigram-add1";
};

/// Deterministic in-process backend. Next-token distribution after history
/// h is
///
///   P(w | h, ctx) = (1 - λ) P_train(w | h) + λ P_ctx(w | h)
///
/// where P_ctx is an add-one bigram over the prompt's user text (question,
/// and the document when one is supplied) and λ = cache_weight when that
/// text is non-empty, else 0. h is the last token of assistant prefix plus
/// continuation, or EOS at the start of the answer.
class NgramBackend final : public LocalBackend {
 public:
  NgramBackend(std::shared_ptr<const NgramModel> model, std::shared_ptr<const Tokenizer> tokenizer,
               NgramBackendOptions options = {});

  /// Trains on the sentences of `texts` with `tokenizer`.
  static std::shared_ptr<NgramBackend> from_texts(const std::vector<std::string>& texts,
                                                  std::shared_ptr<const Tokenizer> tokenizer,
                                                  NgramBackendOptions options = {});

  BackendDescriptor descriptor() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::string token_text(TokenId id) const override;

  const NgramModel& model() const { return *model_; }
  const NgramBackendOptions& options() const { return options_; }

 protected:
  std::unique_ptr<Session> open(const PromptContext& ctx) const override;

 private:
  std::shared_ptr<const NgramModel> model_;
  NgramBackendOptions options_;
};

}  // namespace s2k
