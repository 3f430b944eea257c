#include "s2k/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "s2k/error.hpp"

namespace s2k {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant_prefix:
      return "assistant";
  }
  return "user";
}

PromptContext& PromptContext::add(Role role, std::string text, std::string label) {
  if (role == Role::assistant_prefix) return set_assistant_prefix(std::move(text));
  if (!segments_.empty() && segments_.back().role == Role::assistant_prefix)
    throw PreconditionError("PromptContext: assistant prefix must stay last");
  segments_.push_back({role, std::move(text), std::move(label)});
  return *this;
}

PromptContext& PromptContext::set_assistant_prefix(std::string text) {
  if (!segments_.empty() && segments_.back().role == Role::assistant_prefix) {
    segments_.back().text = std::move(text);
  } else {
    segments_.push_back({Role::assistant_prefix, std::move(text), "answer"});
  }
  return *this;
}

std::string PromptContext::assistant_prefix() const {
  if (!segments_.empty() && segments_.back().role == Role::assistant_prefix) return segments_.back().text;
  return {};
}

bool PromptContext::has_label(std::string_view label) const {
  return std::any_of(segments_.begin(), segments_.end(), [&](const auto& s) { return s.label == label; });
}

std::string PromptContext::user_text() const {
  std::string out;
  for (const auto& s : segments_) {
    if (s.role != Role::user) continue;
    if (!out.empty()) out += "\n";
    out += s.text;
  }
  return out;
}

std::string PromptContext::serialize() const {
  std::string out;
  bool has_prefix = false;
  for (const auto& s : segments_) {
    out += "<|";
    out += to_string(s.role);
    out += "|>\n";
    out += s.text;
    if (s.role == Role::assistant_prefix) {
      has_prefix = true;
    } else {
      out += "\n";
    }
  }
  if (!has_prefix) out += "<|assistant|>\n";
  return out;
}

double WindowProposal::mean_logprob() const {
  if (logprobs.empty()) return -std::numeric_limits<double>::infinity();
  return std::accumulate(logprobs.begin(), logprobs.end(), 0.0) / static_cast<double>(logprobs.size());
}

TokenDistribution TokenDistribution::full(std::vector<double> p) {
  TokenDistribution d;
  d.vocab_size = p.size();
  d.probs = std::move(p);
  d.coverage = Coverage::full;
  return d;
}

TokenDistribution TokenDistribution::top_k(std::vector<TokenId> ids, std::vector<double> p, std::size_t vocab_size) {
  if (ids.size() != p.size()) throw PreconditionError("top_k distribution: ids/probs length mismatch");
  TokenDistribution d;
  d.ids = std::move(ids);
  d.probs = std::move(p);
  d.coverage = Coverage::top_k;
  d.vocab_size = vocab_size;
  return d;
}

double TokenDistribution::prob(TokenId id) const {
  if (coverage == Coverage::full) {
    if (id < 0 || static_cast<std::size_t>(id) >= probs.size()) return 0.0;
    return probs[static_cast<std::size_t>(id)];
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return probs[i];
  }
  return 0.0;
}

TokenId TokenDistribution::argmax() const {
  if (probs.empty()) throw PreconditionError("argmax of empty distribution");
  if (coverage == Coverage::full) {
    auto it = std::max_element(probs.begin(), probs.end());  // first maximum
    return static_cast<TokenId>(it - probs.begin());
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best] || (probs[i] == probs[best] && ids[i] < ids[best])) best = i;
  }
  return ids[best];
}

double TokenDistribution::mass() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

nlohmann::json BackendDescriptor::to_json() const {
  return {{"kind", kind},
          {"model_name", model_name},
          {"tokenizer_id", tokenizer_id},
          {"vocab_size", vocab_size},
          {"capabilities",
           {{"full_distributions", capabilities.full_distributions},
            {"teacher_forcing", capabilities.teacher_forcing}}}};
}

Vocabulary::Vocabulary() : by_id_{std::string(kEosText), "<unk>"} {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  std::vector<std::string> rest;
  for (const auto& t : tokens) {
    if (t != kEosText && t != "<unk>") rest.push_back(t);
  }
  std::sort(rest.begin(), rest.end());
  rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
  by_id_.insert(by_id_.end(), rest.begin(), rest.end());
}

TokenId Vocabulary::id(std::string_view token) const {
  if (token == kEosText) return kEos;
  auto first = by_id_.begin() + 2;
  auto it = std::lower_bound(first, by_id_.end(), token,
                             [](const std::string& a, std::string_view b) { return std::string_view(a) < b; });
  if (it != by_id_.end() && *it == token) return static_cast<TokenId>(it - by_id_.begin());
  return kUnk;
}

const std::string& Vocabulary::text(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= by_id_.size()) throw PreconditionError("token id out of range");
  return by_id_[static_cast<std::size_t>(id)];
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

TokenId choose_token(const TokenDistribution& dist, const DecodeParams& decode, std::uint64_t stream,
                     std::size_t step) {
  if (decode.greedy || decode.temperature <= 0.0) return dist.argmax();
  std::mt19937_64 rng(decode.seed ^ (stream + 0x9E3779B97F4A7C15ULL * (step + 1)));
  std::vector<double> w(dist.probs.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = dist.probs[i] > 0 ? std::pow(dist.probs[i], 1.0 / decode.temperature) : 0.0;
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0)) return dist.argmax();
  // Inverse-CDF draw from the raw 64-bit output keeps results identical
  // across standard library implementations.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return dist.coverage == Coverage::full ? static_cast<TokenId>(i) : dist.ids[i];
  }
  return dist.argmax();
}

LocalBackend::LocalBackend(std::shared_ptr<const Tokenizer> tokenizer, std::size_t context_limit)
    : tokenizer_(std::move(tokenizer)), context_limit_(context_limit) {}

void LocalBackend::check_context(const PromptContext& ctx) const {
  if (context_limit_ == 0) return;
  std::size_t n = 0;
  for (const auto& s : ctx.segments()) n += tokenizer_->count(s.text);
  if (n > context_limit_)
    throw ContextTooLong("prompt has " + std::to_string(n) + " tokens, limit " + std::to_string(context_limit_));
}

WindowProposal LocalBackend::propose_window(const PromptContext& ctx, std::size_t window,
                                            const DecodeParams& decode) const {
  if (window < 1) throw PreconditionError("propose_window: W must be >= 1");
  check_context(ctx);
  auto session = open(ctx);
  const auto stream = fnv1a64(ctx.serialize());
  WindowProposal w;
  for (std::size_t j = 0; j < window; ++j) {
    auto dist = session->next(w.tokens);
    TokenId tok = choose_token(dist, decode, stream, j);
    w.tokens.push_back(tok);
    w.texts.push_back(token_text(tok));
    w.logprobs.push_back(std::log(dist.prob(tok)));
    if (tok == kEos) {
      w.ended = true;
      break;
    }
  }
  return w;
}

std::vector<TokenDistribution> LocalBackend::score_teacher_forced(const PromptContext& ctx,
                                                                  std::span<const TokenId> targets) const {
  std::vector<TokenDistribution> out;
  if (targets.empty()) return out;
  check_context(ctx);
  auto session = open(ctx);
  out.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) out.push_back(session->next(targets.first(t)));
  return out;
}

std::string LocalBackend::generate_text(const PromptContext& ctx, const DecodeParams& params) const {
  auto w = propose_window(ctx, std::max<std::size_t>(params.max_tokens, 1), params);
  return decode(w.tokens);
}

}  // namespace s2k
