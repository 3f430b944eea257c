#include "s2k/remote.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "s2k/error.hpp"

namespace s2k {

namespace {

struct Reply {
  std::string text;
  std::string finish_reason;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  std::vector<nlohmann::json> top_logprobs;
  std::vector<long long> text_offset;
};

Reply parse_reply(const nlohmann::json& j) {
  const nlohmann::json* body = &j;
  if (j.contains("choices")) {
    if (!j["choices"].is_array() || j["choices"].empty()) throw BackendUnavailable("reply has no choices");
    body = &j["choices"][0];
  }
  Reply r;
  r.text = body->value("text", std::string{});
  if (body->contains("finish_reason") && (*body)["finish_reason"].is_string())
    r.finish_reason = (*body)["finish_reason"].get<std::string>();
  const nlohmann::json* lp = body;
  if (body->contains("logprobs") && (*body)["logprobs"].is_object()) lp = &(*body)["logprobs"];
  if (lp->contains("tokens")) r.tokens = (*lp)["tokens"].get<std::vector<std::string>>();
  if (lp->contains("token_logprobs")) {
    for (const auto& v : (*lp)["token_logprobs"]) r.token_logprobs.push_back(v.is_number() ? v.get<double>() : 0.0);
  }
  if (lp->contains("top_logprobs") && (*lp)["top_logprobs"].is_array()) {
    for (const auto& v : (*lp)["top_logprobs"]) r.top_logprobs.push_back(v);
  }
  if (lp->contains("text_offset")) r.text_offset = (*lp)["text_offset"].get<std::vector<long long>>();
  if (r.tokens.size() != r.token_logprobs.size()) throw BackendUnavailable("reply tokens/token_logprobs length mismatch");
  return r;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig cfg)
    : cfg_(std::move(cfg)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.max_inflight, 1, 1024))),
      texts_{std::string(kEosText)} {
  if (cfg_.base_url.empty()) throw ConfigError("remote.base_url is required");
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
  ids_[std::string(kEosText)] = kEos;
}

BackendDescriptor RemoteBackend::descriptor() const {
  BackendDescriptor d;
  d.kind = "remote";
  d.capabilities = {false, true};
  d.model_name = cfg_.model;
  d.tokenizer_id = "remote:" + cfg_.model;
  d.vocab_size = cfg_.vocab_size;
  return d;
}

TokenId RemoteBackend::intern(const std::string& token) const {
  std::lock_guard lock(vocab_mu_);
  auto [it, inserted] = ids_.try_emplace(token, static_cast<TokenId>(texts_.size()));
  if (inserted) texts_.push_back(token);
  return it->second;
}

nlohmann::json RemoteBackend::post(const nlohmann::json& body) const {
  slots_.acquire();
  auto now = ++inflight_;
  for (auto peak = peak_inflight_.load(); now > peak && !peak_inflight_.compare_exchange_weak(peak, now);) {
  }
  struct Release {
    const RemoteBackend& self;
    ~Release() {
      --self.inflight_;
      self.slots_.release();
    }
  } release{*this};

  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string payload = body.dump();
  std::string last_error;
  for (std::size_t attempt = 0;; ++attempt) {
    ++requests_;
    auto res = client.Post(cfg_.path, headers, payload, "application/json");
    bool retryable = false;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw BackendUnavailable(std::string("unparseable reply: ") + e.what());
      }
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = res->status == 429 || res->status >= 500;
    }
    if (!retryable || attempt >= cfg_.retry_max) {
      throw BackendUnavailable(last_error + " after " + std::to_string(attempt + 1) + " attempt(s)");
    }
    ++retries_;
    sleeper_(std::chrono::milliseconds(static_cast<long long>(cfg_.backoff_base_ms) << attempt));
  }
}

WindowProposal RemoteBackend::propose_window(const PromptContext& ctx, std::size_t window,
                                             const DecodeParams& decode) const {
  if (window < 1) throw PreconditionError("propose_window: W must be >= 1");
  nlohmann::json body = {{"model", cfg_.model},
                         {"prompt", ctx.serialize()},
                         {"max_tokens", window},
                         {"temperature", decode.greedy ? 0.0 : decode.temperature},
                         {"logprobs", decode.top_logprobs},
                         {"seed", decode.seed}};
  auto r = parse_reply(post(body));
  WindowProposal w;
  for (std::size_t i = 0; i < r.tokens.size() && i < window; ++i) {
    auto id = intern(r.tokens[i]);
    w.tokens.push_back(id);
    w.texts.push_back(r.tokens[i]);
    w.logprobs.push_back(std::min(0.0, r.token_logprobs[i]));
    if (id == kEos) break;
  }
  w.ended = (!w.tokens.empty() && w.tokens.back() == kEos) || r.finish_reason == "stop";
  return w;
}

std::vector<TokenDistribution> RemoteBackend::score_teacher_forced(const PromptContext& ctx,
                                                                   std::span<const TokenId> targets) const {
  std::vector<TokenDistribution> out;
  if (targets.empty()) return out;
  const std::string prompt = ctx.serialize();
  std::string target_text;
  for (TokenId t : targets) target_text += token_text(t);
  nlohmann::json body = {{"model", cfg_.model}, {"prompt", prompt + target_text}, {"max_tokens", 0},
                         {"echo", true},        {"logprobs", 5},                   {"temperature", 0.0}};
  auto r = parse_reply(post(body));

  // First echoed position belonging to the target text.
  std::size_t start = r.tokens.size();
  if (!r.text_offset.empty()) {
    for (std::size_t i = 0; i < r.text_offset.size(); ++i) {
      if (r.text_offset[i] >= static_cast<long long>(prompt.size())) {
        start = i;
        break;
      }
    }
  } else {
    std::size_t consumed = 0;
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
      if (consumed >= prompt.size()) {
        start = i;
        break;
      }
      consumed += r.tokens[i].size();
    }
  }
  if (r.tokens.size() - start != targets.size())
    throw BackendUnavailable("echo scoring: expected " + std::to_string(targets.size()) + " target tokens, got " +
                             std::to_string(r.tokens.size() - start));

  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::size_t pos = start + t;
    std::vector<TokenId> ids;
    std::vector<double> probs;
    if (pos < r.top_logprobs.size() && r.top_logprobs[pos].is_object()) {
      for (const auto& [tok, lp] : r.top_logprobs[pos].items()) {
        ids.push_back(intern(tok));
        probs.push_back(std::exp(lp.get<double>()));
      }
    }
    if (std::find(ids.begin(), ids.end(), targets[t]) == ids.end()) {
      ids.push_back(targets[t]);
      probs.push_back(std::exp(r.token_logprobs[pos]));
    }
    out.push_back(TokenDistribution::top_k(std::move(ids), std::move(probs), cfg_.vocab_size));
  }
  return out;
}

std::string RemoteBackend::generate_text(const PromptContext& ctx, const DecodeParams& decode) const {
  // Word-level count: a lower bound on the server's own token count.
  if (cfg_.context_limit > 0 && WordTokenizer().count(ctx.serialize()) > cfg_.context_limit)
    throw ContextTooLong("prompt exceeds remote context limit of " + std::to_string(cfg_.context_limit));
  nlohmann::json body = {{"model", cfg_.model},
                         {"prompt", ctx.serialize()},
                         {"max_tokens", decode.max_tokens},
                         {"temperature", decode.greedy ? 0.0 : decode.temperature},
                         {"seed", decode.seed}};
  return parse_reply(post(body)).text;
}

std::vector<TokenId> RemoteBackend::encode(std::string_view text) const {
  if (text.empty()) return {};
  nlohmann::json body = {{"model", cfg_.model}, {"prompt", std::string(text)}, {"max_tokens", 0},
                         {"echo", true},        {"logprobs", 0}};
  auto r = parse_reply(post(body));
  std::vector<TokenId> out;
  for (const auto& t : r.tokens) out.push_back(intern(t));
  return out;
}

std::string RemoteBackend::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id != kEos) out += token_text(id);
  }
  return out;
}

std::string RemoteBackend::token_text(TokenId id) const {
  std::lock_guard lock(vocab_mu_);
  if (id < 0 || static_cast<std::size_t>(id) >= texts_.size()) throw PreconditionError("unknown remote token id");
  return texts_[static_cast<std::size_t>(id)];
}

}  // namespace s2k
