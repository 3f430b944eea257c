#include "s2k/mock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "s2k/error.hpp"

namespace s2k {

namespace {

std::shared_ptr<const Tokenizer> shared_word_tokenizer() {
  static const auto tok = std::make_shared<const WordTokenizer>();
  return tok;
}

std::string first_sentence(std::string_view text) {
  RuleSentenceSplitter splitter;
  auto spans = splitter.split(text);
  if (spans.empty()) return std::string(text::trim(text));
  return std::string(text.substr(spans[0].begin, spans[0].end - spans[0].begin));
}

std::string strip_terminal_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '?' || s.back() == '!' || s.back() == ':')) s.pop_back();
  return s;
}

struct InputEntry {
  std::string question;
  std::string chunk;
};

std::vector<InputEntry> parse_input_block(std::string_view prompt) {
  std::vector<InputEntry> out;
  auto at = prompt.rfind("### Input:");
  if (at == std::string_view::npos) return out;
  auto end = prompt.find("\n\nNow start generating", at);
  auto block = prompt.substr(at + 10, end == std::string_view::npos ? std::string_view::npos : end - at - 10);
  for (const auto& raw : text::split(block, '\n')) {
    auto line = text::trim(raw);
    auto dot = line.find(". ");
    if (dot == std::string_view::npos || dot == 0) continue;
    if (!std::all_of(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(dot),
                     [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    auto body = line.substr(dot + 2);
    auto open = body.find(" (Text: ");
    InputEntry e;
    if (open == std::string_view::npos) {
      e.question = std::string(body);
    } else {
      e.question = std::string(body.substr(0, open));
      auto chunk = body.substr(open + 8);
      if (!chunk.empty() && chunk.back() == ')') chunk.remove_suffix(1);
      e.chunk = std::string(chunk);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string meta_reply(std::string_view document) {
  auto sentence = strip_terminal_punct(first_sentence(document));
  WordTokenizer tok;
  auto words = tok.tokenize(sentence);
  nlohmann::json j;
  if (words.size() < 4) {
    j["question"] = "";
  } else {
    std::vector<std::string> head(words.begin(), words.begin() + std::min<std::size_t>(words.size(), 12));
    j["question"] = "What mechanism or condition explains the statement that " + tok.detokenize(head) + "?";
  }
  return "```json\n" + j.dump() + "\n```";
}

std::string reasoning_reply(std::string_view prompt) {
  auto entries = parse_input_block(prompt);
  if (entries.empty()) return "I could not find any input to work with.";
  const bool long_form = prompt.find("### Question Type Requirement: Long form") != std::string_view::npos;
  std::ostringstream out;
  out << "A specialist reviews a scenario that combines the following observations: ";
  for (std::size_t i = 0; i < entries.size() && i < 3; ++i) {
    if (i) out << "; ";
    out << strip_terminal_punct(entries[i].question);
  }
  out << ". ";
  if (long_form) {
    out << "Based on the information provided, what is the most likely explanation?\n";
    auto basis = entries[0].chunk.empty() ? entries[0].question : entries[0].chunk;
    out << "Correct Answer: " << strip_terminal_punct(first_sentence(basis)) << "\n";
    return out.str();
  }
  out << "Which of the following conclusions is best supported?\n";
  static constexpr char kLetters[] = {'A', 'B', 'C', 'D'};
  for (std::size_t i = 0; i < 4; ++i) {
    std::string opt;
    if (i < entries.size()) {
      opt = strip_terminal_punct(first_sentence(entries[i].chunk.empty() ? entries[i].question : entries[i].chunk));
    } else {
      opt = "None of the listed mechanisms applies (" + std::to_string(i + 1) + ")";
    }
    out << kLetters[i] << ". " << opt << "\n";
  }
  auto correct = kLetters[fnv1a64(prompt) % std::min<std::size_t>(4, std::max<std::size_t>(1, entries.size()))];
  out << "Correct Answer: " << correct << "\n";
  return out.str();
}

}  // namespace

TableBackend::TableBackend(std::vector<std::string> vocab, std::size_t context_limit)
    : LocalBackend(shared_word_tokenizer(), context_limit), vocab_(std::move(vocab)) {
  if (vocab_.empty() || vocab_[0] != kEosText) throw PreconditionError("TableBackend: vocab[0] must be </s>");
}

TableBackend& TableBackend::set(const std::string& key, std::vector<double> probs) {
  if (probs.size() != vocab_.size()) throw PreconditionError("TableBackend: table '" + key + "' has wrong width");
  tables_[key] = std::move(probs);
  return *this;
}

TableBackend& TableBackend::canned(const std::string& serialized_prompt, std::string reply) {
  canned_[serialized_prompt] = std::move(reply);
  return *this;
}

TableBackend& TableBackend::responder(Responder r) {
  responder_ = std::move(r);
  return *this;
}

BackendDescriptor TableBackend::descriptor() const {
  BackendDescriptor d;
  d.kind = "mock";
  d.capabilities = {true, true};
  d.model_name = "table";
  d.tokenizer_id = tokenizer_->id();
  d.vocab_size = vocab_.size();
  return d;
}

TokenId TableBackend::id_of(const std::string& token) const {
  auto it = std::find(vocab_.begin(), vocab_.end(), token);
  if (it == vocab_.end()) throw TokenizerFailure("TableBackend: token '" + token + "' not in vocabulary");
  return static_cast<TokenId>(it - vocab_.begin());
}

std::vector<TokenId> TableBackend::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& t : tokenizer_->tokenize(text)) out.push_back(id_of(t));
  return out;
}

std::string TableBackend::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> pieces;
  for (TokenId id : ids) {
    if (id != kEos) pieces.push_back(token_text(id));
  }
  return tokenizer_->detokenize(pieces);
}

std::string TableBackend::token_text(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) throw PreconditionError("token id out of range");
  return vocab_[static_cast<std::size_t>(id)];
}

std::string TableBackend::channel(const PromptContext& ctx) { return ctx.has_label("document") ? "E" : "I"; }

std::vector<double> TableBackend::lookup(const std::string& ch, const std::vector<TokenId>& prefix) const {
  std::string joined;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) joined += ' ';
    joined += vocab_[static_cast<std::size_t>(prefix[i])];
  }
  for (const auto& key : {ch + "|" + joined, ch + "#" + std::to_string(prefix.size()), ch + "*", std::string("*")}) {
    auto it = tables_.find(key);
    if (it != tables_.end()) return it->second;
  }
  std::vector<double> eos(vocab_.size(), 0.0);
  eos[0] = 1.0;
  return eos;
}

namespace {

class TableSession final : public LocalBackend::Session {
 public:
  TableSession(const TableBackend& backend, std::string channel, std::vector<TokenId> prefix)
      : backend_(backend), channel_(std::move(channel)), prefix_(std::move(prefix)) {}

  TokenDistribution next(std::span<const TokenId> continuation) const override {
    auto history = prefix_;
    history.insert(history.end(), continuation.begin(), continuation.end());
    return TokenDistribution::full(backend_.lookup(channel_, history));
  }

 private:
  const TableBackend& backend_;
  std::string channel_;
  std::vector<TokenId> prefix_;
};

}  // namespace

std::unique_ptr<LocalBackend::Session> TableBackend::open(const PromptContext& ctx) const {
  return std::make_unique<TableSession>(*this, channel(ctx), encode(ctx.assistant_prefix()));
}

std::string TableBackend::generate_text(const PromptContext& ctx, const DecodeParams& params) const {
  check_context(ctx);
  auto it = canned_.find(ctx.serialize());
  if (it != canned_.end()) return it->second;
  if (responder_) return responder_(ctx);
  return LocalBackend::generate_text(ctx, params);
}

std::string synthetic_reply(const PromptContext& ctx) {
  auto prompt = ctx.user_text();
  auto doc_at = prompt.rfind("## Document:\n");
  if (prompt.find("### Reasoning Type Requirement:") != std::string::npos) return reasoning_reply(prompt);
  if (doc_at != std::string::npos) return meta_reply(std::string_view(prompt).substr(doc_at + 13));
  return "{\"question\": \"\"}";
}

CompositeBackend::CompositeBackend(std::shared_ptr<const Backend> scorer,
                                   std::function<std::string(const PromptContext&)> generator, std::string kind)
    : scorer_(std::move(scorer)), generator_(std::move(generator)), kind_(std::move(kind)) {}

BackendDescriptor CompositeBackend::descriptor() const {
  auto d = scorer_->descriptor();
  d.model_name = kind_ + "+" + d.model_name;
  d.kind = kind_;
  return d;
}

WindowProposal CompositeBackend::propose_window(const PromptContext& ctx, std::size_t window,
                                                const DecodeParams& decode) const {
  return scorer_->propose_window(ctx, window, decode);
}

std::vector<TokenDistribution> CompositeBackend::score_teacher_forced(const PromptContext& ctx,
                                                                      std::span<const TokenId> targets) const {
  return scorer_->score_teacher_forced(ctx, targets);
}

std::string CompositeBackend::generate_text(const PromptContext& ctx, const DecodeParams&) const {
  return generator_(ctx);
}

std::vector<TokenId> CompositeBackend::encode(std::string_view text) const { return scorer_->encode(text); }
std::string CompositeBackend::decode(std::span<const TokenId> ids) const { return scorer_->decode(ids); }
std::string CompositeBackend::token_text(TokenId id) const { return scorer_->token_text(id); }

}  // namespace s2k
