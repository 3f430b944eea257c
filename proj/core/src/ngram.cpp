#include "s2k/ngram.hpp"

#include <algorithm>

#include "s2k/error.hpp"

namespace s2k {

void BigramCounts::add_sequence(const std::vector<TokenId>& ids) {
  TokenId h = kEos;
  auto bump = [&](TokenId from, TokenId to) {
    auto& succ = successors_[static_cast<std::size_t>(from)];
    auto it = std::lower_bound(succ.begin(), succ.end(), to,
                               [](const auto& p, TokenId v) { return p.first < v; });
    if (it != succ.end() && it->first == to) {
      ++it->second;
    } else {
      succ.insert(it, {to, 1});
    }
    ++totals_[static_cast<std::size_t>(from)];
  };
  for (TokenId w : ids) {
    bump(h, w);
    h = w;
  }
  bump(h, kEos);
}

std::uint64_t BigramCounts::count(TokenId h, TokenId w) const {
  const auto& succ = successors(h);
  auto it = std::lower_bound(succ.begin(), succ.end(), w, [](const auto& p, TokenId v) { return p.first < v; });
  return (it != succ.end() && it->first == w) ? it->second : 0;
}

BigramCounts BigramCounts::from_successors(std::vector<std::vector<std::pair<TokenId, std::uint32_t>>> succ) {
  BigramCounts c(succ.size());
  for (std::size_t h = 0; h < succ.size(); ++h) {
    auto& list = succ[h];
    std::sort(list.begin(), list.end());
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].first == list[i - 1].first) throw SchemaError("duplicate bigram in serialized counts");
    }
    for (const auto& [w, n] : list) c.totals_[h] += n;
    c.successors_[h] = std::move(list);
  }
  return c;
}

bool BigramCounts::empty() const {
  return std::all_of(totals_.begin(), totals_.end(), [](auto t) { return t == 0; });
}

void BigramCounts::smoothed(TokenId h, std::vector<double>& out) const {
  const double v = static_cast<double>(vocab_size());
  const double denom = static_cast<double>(total(h)) + v;
  out.assign(vocab_size(), 1.0 / denom);
  for (const auto& [w, c] : successors(h)) out[static_cast<std::size_t>(w)] = (c + 1.0) / denom;
}

NgramModel NgramModel::train(const std::vector<std::vector<std::string>>& sequences) {
  std::vector<std::string> all;
  for (const auto& s : sequences) all.insert(all.end(), s.begin(), s.end());
  NgramModel m;
  m.vocab_ = Vocabulary(all);
  m.counts_ = BigramCounts(m.vocab_.size());
  for (const auto& s : sequences) m.counts_.add_sequence(m.ids(s));
  return m;
}

std::vector<TokenId> NgramModel::ids(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab_.id(t));
  return out;
}

nlohmann::json NgramModel::to_json() const {
  nlohmann::json bigrams = nlohmann::json::array();
  for (std::size_t h = 0; h < counts_.vocab_size(); ++h) {
    for (const auto& [w, c] : counts_.successors(static_cast<TokenId>(h))) bigrams.push_back({h, w, c});
  }
  return {{"format", "s2k-bigram-add1/1"}, {"vocab", vocab_.tokens()}, {"bigrams", bigrams}};
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "s2k-bigram-add1/1") throw SchemaError("unknown n-gram model format");
  auto tokens = j.at("vocab").get<std::vector<std::string>>();
  NgramModel m;
  m.vocab_ = Vocabulary(tokens);
  if (m.vocab_.tokens() != tokens) throw SchemaError("n-gram vocabulary is not in canonical order");
  std::vector<std::vector<std::pair<TokenId, std::uint32_t>>> succ(m.vocab_.size());
  for (const auto& b : j.at("bigrams")) {
    auto h = b.at(0).get<TokenId>();
    auto w = b.at(1).get<TokenId>();
    auto c = b.at(2).get<std::uint32_t>();
    if (h < 0 || w < 0 || static_cast<std::size_t>(h) >= succ.size() || static_cast<std::size_t>(w) >= succ.size())
      throw SchemaError("n-gram bigram id out of range");
    succ[static_cast<std::size_t>(h)].push_back({w, c});
  }
  m.counts_ = BigramCounts::from_successors(std::move(succ));
  return m;
}

namespace {

class NgramSession final : public LocalBackend::Session {
 public:
  NgramSession(const NgramModel& model, std::vector<TokenId> prefix, BigramCounts cache, double lambda)
      : model_(model), prefix_(std::move(prefix)), cache_(std::move(cache)), lambda_(lambda) {}

  TokenDistribution next(std::span<const TokenId> continuation) const override {
    TokenId h = kEos;
    if (!continuation.empty()) {
      h = continuation.back();
    } else if (!prefix_.empty()) {
      h = prefix_.back();
    }
    std::vector<double> p;
    model_.counts().smoothed(h, p);
    if (lambda_ > 0) {
      std::vector<double> q;
      cache_.smoothed(h, q);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - lambda_) * p[i] + lambda_ * q[i];
    }
    return TokenDistribution::full(std::move(p));
  }

 private:
  const NgramModel& model_;
  std::vector<TokenId> prefix_;
  BigramCounts cache_;
  double lambda_;
};

}  // namespace

NgramBackend::NgramBackend(std::shared_ptr<const NgramModel> model, std::shared_ptr<const Tokenizer> tokenizer,
                           NgramBackendOptions options)
    : LocalBackend(std::move(tokenizer), options.context_limit), model_(std::move(model)), options_(options) {
  if (options_.cache_weight < 0 || options_.cache_weight > 1)
    throw ConfigError("ngram.cache_weight must be in [0, 1]");
}

std::shared_ptr<NgramBackend> NgramBackend::from_texts(const std::vector<std::string>& texts,
                                                       std::shared_ptr<const Tokenizer> tokenizer,
                                                       NgramBackendOptions options) {
  RuleSentenceSplitter splitter;
  std::vector<std::vector<std::string>> sequences;
  for (const auto& t : texts) {
    for (const auto& span : splitter.split(t)) {
      auto toks = tokenizer->tokenize(std::string_view(t).substr(span.begin, span.end - span.begin));
      if (!toks.empty()) sequences.push_back(std::move(toks));
    }
  }
  auto model = std::make_shared<NgramModel>(NgramModel::train(sequences));
  return std::make_shared<NgramBackend>(std::move(model), std::move(tokenizer), options);
}

BackendDescriptor NgramBackend::descriptor() const {
  BackendDescriptor d;
  d.kind = "ngram";
  d.capabilities = {true, true};
  d.model_name = options_.model_name;
  d.tokenizer_id = tokenizer_->id();
  d.vocab_size = model_->vocab().size();
  return d;
}

std::vector<TokenId> NgramBackend::encode(std::string_view text) const {
  return model_->ids(tokenizer_->tokenize(text));
}

std::string NgramBackend::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> pieces;
  for (TokenId id : ids) {
    if (id != kEos) pieces.push_back(model_->vocab().text(id));
  }
  return tokenizer_->detokenize(pieces);
}

std::string NgramBackend::token_text(TokenId id) const { return model_->vocab().text(id); }

std::unique_ptr<LocalBackend::Session> NgramBackend::open(const PromptContext& ctx) const {
  auto prefix = encode(ctx.assistant_prefix());
  BigramCounts cache(model_->vocab().size());
  double lambda = 0;
  if (options_.cache_weight > 0) {
    auto user = ctx.user_text();
    RuleSentenceSplitter splitter;
    for (const auto& span : splitter.split(user)) {
      auto toks = tokenizer_->tokenize(std::string_view(user).substr(span.begin, span.end - span.begin));
      if (!toks.empty()) cache.add_sequence(model_->ids(toks));
    }
    if (!cache.empty()) lambda = options_.cache_weight;
  }
  return std::make_unique<NgramSession>(*model_, std::move(prefix), std::move(cache), lambda);
}

}  // namespace s2k
