#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/text.hpp"

namespace s2k {

using TokenId = std::int32_t;

/// Id 0 is end-of-sequence in every backend vocabulary.
inline constexpr TokenId kEos = 0;
inline constexpr std::string_view kEosText = "</s>";

enum class Role { system, user, assistant_prefix };

std::string_view to_string(Role r);

struct PromptSegment {
  Role role = Role::user;
  std::string text;
  /// Free-form tag ("question", "document", ...). Not serialized into the
  /// prompt; lets backends and tests identify segments.
  std::string label;
};

/// Ordered prompt segments. At most one assistant-prefix segment, always
/// last; it carries the partial answer the model continues from.
class PromptContext {
 public:
  PromptContext() = default;

  PromptContext& add(Role role, std::string text, std::string label = {});
  /// Replaces (or appends) the trailing assistant-prefix segment.
  PromptContext& set_assistant_prefix(std::string text);

  const std::vector<PromptSegment>& segments() const { return segments_; }
  std::string assistant_prefix() const;
  bool has_label(std::string_view label) const;
  /// Concatenation of all user segments, in order.
  std::string user_text() const;

  /// Deterministic flat prompt: `<|role|>\n` headers before each segment.
  std::string serialize() const;

 private:
  std::vector<PromptSegment> segments_;
};

struct WindowProposal {
  std::vector<TokenId> tokens;
  std::vector<std::string> texts;
  /// Natural-log probability of each token under the proposing context.
  std::vector<double> logprobs;
  bool ended = false;

  double mean_logprob() const;
};

enum class Coverage { full, top_k };

/// Next-token distribution. Full coverage stores all V probabilities
/// indexed by token id; top-k coverage stores `ids[i] -> probs[i]`.
struct TokenDistribution {
  std::vector<double> probs;
  std::vector<TokenId> ids;
  Coverage coverage = Coverage::full;
  std::size_t vocab_size = 0;

  static TokenDistribution full(std::vector<double> p);
  static TokenDistribution top_k(std::vector<TokenId> ids, std::vector<double> p, std::size_t vocab_size);

  std::size_t k() const { return coverage == Coverage::full ? vocab_size : ids.size(); }
  /// Probability of `id`; 0 when it falls outside a top-k list.
  double prob(TokenId id) const;
  /// Highest-probability id, lowest id on ties.
  TokenId argmax() const;
  double mass() const;
};

struct BackendCapabilities {
  bool full_distributions = false;
  bool teacher_forcing = false;
};

struct BackendDescriptor {
  std::string kind;  // mock | ngram | remote
  BackendCapabilities capabilities;
  std::string model_name;
  std::string tokenizer_id;
  std::size_t vocab_size = 0;

  nlohmann::json to_json() const;
};

struct DecodeParams {
  bool greedy = true;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 256;
  /// Alternatives requested per position from remote backends.
  std::size_t top_logprobs = 5;
};

/// A generative scoring backend. All methods are safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendDescriptor descriptor() const = 0;

  /// Proposes up to `window` tokens continuing `ctx`, with their
  /// log-probabilities; stops after an EOS token.
  virtual WindowProposal propose_window(const PromptContext& ctx, std::size_t window,
                                        const DecodeParams& decode) const = 0;

  /// Distribution at each target position given ctx and the preceding targets.
  virtual std::vector<TokenDistribution> score_teacher_forced(const PromptContext& ctx,
                                                              std::span<const TokenId> targets) const = 0;

  virtual std::string generate_text(const PromptContext& ctx, const DecodeParams& decode) const = 0;

  /// Maps answer text onto this backend's token ids.
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  /// Surface text for ids, EOS dropped.
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual std::string token_text(TokenId id) const = 0;
};

/// Maps surface tokens to dense ids. Id 0 is EOS and id 1 is `<unk>`; the
/// remaining entries are sorted so a vocabulary built from the same token
/// set is identical regardless of insertion order.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 1;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  TokenId id(std::string_view token) const;
  const std::string& text(TokenId id) const;
  std::size_t size() const { return by_id_.size(); }
  const std::vector<std::string>& tokens() const { return by_id_; }

 private:
  std::vector<std::string> by_id_;  // [2, size) sorted
};

/// Shared propose/score/generate logic for in-process backends that can
/// produce a full distribution after any continuation.
class LocalBackend : public Backend {
 public:
  class Session {
   public:
    virtual ~Session() = default;
    /// Distribution for the token following ctx + `continuation`.
    virtual TokenDistribution next(std::span<const TokenId> continuation) const = 0;
  };

  LocalBackend(std::shared_ptr<const Tokenizer> tokenizer, std::size_t context_limit);

  WindowProposal propose_window(const PromptContext& ctx, std::size_t window,
                                const DecodeParams& decode) const override;
  std::vector<TokenDistribution> score_teacher_forced(const PromptContext& ctx,
                                                      std::span<const TokenId> targets) const override;
  std::string generate_text(const PromptContext& ctx, const DecodeParams& decode) const override;

  const Tokenizer& tokenizer() const { return *tokenizer_; }
  std::size_t context_limit() const { return context_limit_; }

 protected:
  virtual std::unique_ptr<Session> open(const PromptContext& ctx) const = 0;
  /// Throws ContextTooLong when the flattened prompt exceeds the limit.
  void check_context(const PromptContext& ctx) const;

  std::shared_ptr<const Tokenizer> tokenizer_;
  std::size_t context_limit_;
};

/// Picks a token: argmax (lowest id on ties) when greedy, otherwise a draw
/// at `temperature` from a generator seeded by (seed, prompt, step).
TokenId choose_token(const TokenDistribution& dist, const DecodeParams& decode, std::uint64_t stream,
                     std::size_t step);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace s2k
