#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/inference.hpp"

namespace s2k {

struct RemoteConfig {
  /// Scheme, host and optional port, e.g. "http://127.0.0.1:8000".
  std::string base_url;
  std::string path = "/v1/completions";
  std::string model = "default";
  /// Name of the environment variable holding the bearer token.
  std::string api_key_env = "S2K_API_KEY";
  std::size_t max_inflight = 4;
  std::size_t retry_max = 3;
  int timeout_ms = 30000;
  int backoff_base_ms = 200;
  /// Vocabulary size of the served model; needed to normalize entropy.
  std::size_t vocab_size = 32000;
  std::size_t context_limit = 0;
};

/// Client for a completions endpoint that returns per-token
/// log-probabilities. Request body:
///
///   {model, prompt, max_tokens, temperature, logprobs, echo}
///
/// Accepted replies: the legacy completions shape
/// `{choices:[{text, finish_reason, logprobs:{tokens, token_logprobs,
/// top_logprobs, text_offset}}]}` or the flat
/// `{text, tokens, token_logprobs, top_logprobs, finish_reason}`.
///
/// Connection failures, 429 and 5xx are retried up to `retry_max` times with
/// exponential backoff (base * 2^attempt); anything else, or exhausting
/// retries, raises BackendUnavailable. At most `max_inflight` requests are
/// outstanding at any time.
class RemoteBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(RemoteConfig cfg);

  BackendDescriptor descriptor() const override;
  WindowProposal propose_window(const PromptContext& ctx, std::size_t window,
                                const DecodeParams& decode) const override;
  std::vector<TokenDistribution> score_teacher_forced(const PromptContext& ctx,
                                                      std::span<const TokenId> targets) const override;
  std::string generate_text(const PromptContext& ctx, const DecodeParams& decode) const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::string token_text(TokenId id) const override;

  /// Replaces the backoff sleep (tests).
  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }
  std::size_t retries() const { return retries_.load(); }
  std::size_t requests() const { return requests_.load(); }
  std::size_t peak_inflight() const { return peak_inflight_.load(); }

  /// Sends one request body and returns the parsed reply.
  nlohmann::json post(const nlohmann::json& body) const;

 private:
  TokenId intern(const std::string& token) const;

  RemoteConfig cfg_;
  std::string api_key_;
  Sleeper sleeper_;
  mutable std::counting_semaphore<1024> slots_;
  mutable std::atomic<std::size_t> retries_{0};
  mutable std::atomic<std::size_t> requests_{0};
  mutable std::atomic<std::size_t> inflight_{0};
  mutable std::atomic<std::size_t> peak_inflight_{0};
  mutable std::mutex vocab_mu_;
  mutable std::unordered_map<std::string, TokenId> ids_;
  mutable std::vector<std::string> texts_;
};

}  // namespace s2k
