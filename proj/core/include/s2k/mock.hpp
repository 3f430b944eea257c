#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "s2k/inference.hpp"

namespace s2k {

/// Fixture backend driven by hand-written next-token tables.
///
/// A context is classified into a channel: "E" when it carries a segment
/// labelled "document", "I" otherwise. The distribution for the next token
/// is looked up, first match wins, under
///
///   "<channel>|<prefix>"  prefix = answer tokens so far joined by ' '
///   "<channel>#<n>"       n = number of answer tokens so far
///   "<channel>*"          channel default
///   "*"                   global default
///
/// and is one-hot on EOS when nothing matches. Keys built from prefix
/// content make the table context-dependent; positional keys alone give a
/// context-free backend.
class TableBackend final : public LocalBackend {
 public:
  using Responder = std::function<std::string(const PromptContext&)>;

  /// `vocab[0]` must be "</s>".
  explicit TableBackend(std::vector<std::string> vocab, std::size_t context_limit = 0);

  TableBackend& set(const std::string& key, std::vector<double> probs);
  /// Canned completion for an exact serialized prompt.
  TableBackend& canned(const std::string& serialized_prompt, std::string reply);
  TableBackend& responder(Responder r);

  BackendDescriptor descriptor() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::string token_text(TokenId id) const override;
  std::string generate_text(const PromptContext& ctx, const DecodeParams& decode) const override;

  const std::vector<std::string>& vocab() const { return vocab_; }
  TokenId id_of(const std::string& token) const;
  static std::string channel(const PromptContext& ctx);
  /// Distribution the table yields for `channel` after `prefix`.
  std::vector<double> lookup(const std::string& channel, const std::vector<TokenId>& prefix) const;

 protected:
  std::unique_ptr<Session> open(const PromptContext& ctx) const override;

 private:
  std::vector<std::string> vocab_;
  std::map<std::string, std::vector<double>> tables_;
  std::map<std::string, std::string> canned_;
  Responder responder_;
};

/// Offline generator for the pipeline's `mock` backend: answers the
/// question-generation and reasoning prompts with deterministic,
/// well-formed replies derived from the prompt's own input block.
std::string synthetic_reply(const PromptContext& ctx);

/// Routes text generation to one backend and windows/scoring to another.
class CompositeBackend : public Backend {
 public:
  CompositeBackend(std::shared_ptr<const Backend> scorer, std::function<std::string(const PromptContext&)> generator,
                   std::string kind = "mock");

  BackendDescriptor descriptor() const override;
  WindowProposal propose_window(const PromptContext& ctx, std::size_t window,
                                const DecodeParams& decode) const override;
  std::vector<TokenDistribution> score_teacher_forced(const PromptContext& ctx,
                                                      std::span<const TokenId> targets) const override;
  std::string generate_text(const PromptContext& ctx, const DecodeParams& decode) const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::string token_text(TokenId id) const override;

  const Backend& scorer() const { return *scorer_; }

 private:
  std::shared_ptr<const Backend> scorer_;
  std::function<std::string(const PromptContext&)> generator_;
  std::string kind_;
};

}  // namespace s2k
