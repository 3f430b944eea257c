#include <doctest.h>

#include <cmath>

#include "s2k/error.hpp"
#include "s2k/mock.hpp"
#include "s2k/ngram.hpp"
#include "s2k_test_support.hpp"

using namespace s2k;
using s2k::testing::dist;

namespace {

PromptContext question_ctx(const std::string& prefix = {}) {
  PromptContext ctx;
  ctx.add(Role::user, "Q: what?", "question");
  if (!prefix.empty()) ctx.set_assistant_prefix(prefix);
  return ctx;
}

std::shared_ptr<const Tokenizer> word_tokenizer() { return std::make_shared<WordTokenizer>(); }

}  // namespace

TEST_CASE("table backend proposes greedily from its tables") {
  TableBackend tb({"</s>", "A", "B", "C"});
  const auto& v = tb.vocab();
  tb.set("I|", dist(v, {{"A", 0.9}, {"</s>", 0.1}}));
  tb.set("I|A", dist(v, {{"B", 0.6}, {"C", 0.3}, {"</s>", 0.05}}));
  auto w = tb.propose_window(question_ctx(), 2, {});
  CHECK(w.texts == std::vector<std::string>{"A", "B"});
  REQUIRE(w.logprobs.size() == 2);
  CHECK(w.logprobs[0] == doctest::Approx(std::log(0.9)));
  CHECK(w.logprobs[1] == doctest::Approx(std::log(0.6)));
  CHECK_FALSE(w.ended);
  CHECK(w.mean_logprob() == doctest::Approx((std::log(0.9) + std::log(0.6)) / 2));
}

TEST_CASE("one-hot EOS ends a window immediately") {
  TableBackend tb({"</s>", "A"});
  auto w = tb.propose_window(question_ctx(), 1, {});
  CHECK(w.tokens == std::vector<TokenId>{kEos});
  CHECK(w.ended);
}

TEST_CASE("EOS as argmax at step 3 stops a 5-token window") {
  TableBackend tb({"</s>", "A", "B"});
  const auto& v = tb.vocab();
  tb.set("I#0", dist(v, {{"A", 0.8}}));
  tb.set("I#1", dist(v, {{"B", 0.8}}));
  tb.set("I#2", dist(v, {{"</s>", 0.7}}));
  tb.set("I*", dist(v, {{"A", 0.9}}));
  auto w = tb.propose_window(question_ctx(), 5, {});
  CHECK(w.tokens.size() == 3);
  CHECK(w.tokens.back() == kEos);
  CHECK(w.ended);
}

TEST_CASE("table channel follows the document segment") {
  PromptContext ctx = question_ctx();
  CHECK(TableBackend::channel(ctx) == "I");
  ctx.add(Role::user, "Document: x", "document");
  CHECK(TableBackend::channel(ctx) == "E");
}

TEST_CASE("assistant prefix continues the table lookup") {
  TableBackend tb({"</s>", "A", "B"});
  const auto& v = tb.vocab();
  tb.set("I|A", dist(v, {{"B", 0.9}}));
  auto w = tb.propose_window(question_ctx("A"), 1, {});
  CHECK(w.texts == std::vector<std::string>{"B"});
}

TEST_CASE("teacher forcing returns one distribution per target") {
  TableBackend tb({"</s>", "A", "B"});
  const auto& v = tb.vocab();
  tb.set("I|", dist(v, {{"A", 0.5}}));
  tb.set("I|B", dist(v, {{"A", 0.2}, {"B", 0.7}}));
  std::vector<TokenId> targets = {2, 2};
  auto d = tb.score_teacher_forced(question_ctx(), targets);
  REQUIRE(d.size() == 2);
  CHECK(d[0].prob(1) == doctest::Approx(0.5));
  CHECK(d[1].prob(2) == doctest::Approx(0.7));
  CHECK(tb.score_teacher_forced(question_ctx(), std::vector<TokenId>{}).empty());
}

TEST_CASE("canned replies and context limit") {
  TableBackend tb({"</s>", "A"}, 6);
  auto ctx = question_ctx();
  tb.canned(ctx.serialize(), "canned reply");
  CHECK(tb.generate_text(ctx, {}) == "canned reply");
  PromptContext big;
  big.add(Role::user, "one two three four five six seven eight nine ten", "question");
  CHECK_THROWS_AS(tb.propose_window(big, 1, {}), ContextTooLong);
  CHECK_THROWS_AS(tb.generate_text(big, {}), ContextTooLong);
}

TEST_CASE("n-gram add-one probabilities match hand counts") {
  // "a b a b" wrapped as </s> a b a b </s>; V = {</s>, <unk>, a, b}.
  auto backend = NgramBackend::from_texts({"a b a b"}, word_tokenizer(), {.cache_weight = 0.0});
  const auto& m = backend->model();
  REQUIRE(m.vocab().size() == 4);
  const auto a = m.vocab().id("a");
  const auto b = m.vocab().id("b");
  CHECK(m.counts().count(a, b) == 2);
  CHECK(m.counts().total(a) == 2);

  std::vector<TokenId> targets = {b};
  auto d = backend->score_teacher_forced(question_ctx("a"), targets);
  REQUIRE(d.size() == 1);
  CHECK(d[0].prob(b) == doctest::Approx(3.0 / 6.0));
  CHECK(d[0].prob(a) == doctest::Approx(1.0 / 6.0));
  CHECK(d[0].prob(kEos) == doctest::Approx(1.0 / 6.0));
  // From the start of the answer the history is EOS: c(</s>, a) = 1, c(</s>) = 1.
  auto start = backend->score_teacher_forced(question_ctx(), targets);
  CHECK(start[0].prob(a) == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("n-gram distributions sum to one, with and without the cache") {
  auto backend = NgramBackend::from_texts({"The river floods. The tide turns at dusk.", "Storm surge rises."},
                                          word_tokenizer(), {.cache_weight = 0.5});
  PromptContext ctx;
  ctx.add(Role::user, "Document: The tide floods the marsh.", "document");
  ctx.add(Role::user, "Question: When does the tide turn?", "question");
  ctx.set_assistant_prefix("The tide");
  auto targets = backend->encode("turns at dusk .");
  for (const auto& d : backend->score_teacher_forced(ctx, targets)) CHECK(d.mass() == doctest::Approx(1.0));
  auto plain = NgramBackend::from_texts({"The river floods."}, word_tokenizer(), {.cache_weight = 0.0});
  for (const auto& d : plain->score_teacher_forced(ctx, plain->encode("river floods")))
    CHECK(d.mass() == doctest::Approx(1.0));
}

TEST_CASE("the in-context cache favours document tokens") {
  auto backend = NgramBackend::from_texts({"The tide turns. The river floods."}, word_tokenizer());
  auto tide = backend->encode("tide");
  PromptContext plain = question_ctx("The");
  PromptContext with_doc;
  with_doc.add(Role::user, "Document: The tide rises.", "document");
  with_doc.add(Role::user, "Q: what?", "question");
  with_doc.set_assistant_prefix("The");
  auto p0 = backend->score_teacher_forced(plain, tide)[0].prob(tide[0]);
  auto p1 = backend->score_teacher_forced(with_doc, tide)[0].prob(tide[0]);
  CHECK(p1 > p0);
}

TEST_CASE("n-gram model serialization round trips") {
  auto backend = NgramBackend::from_texts({"a b c. b c a. c c."}, word_tokenizer());
  auto j = backend->model().to_json();
  auto back = NgramModel::from_json(j);
  CHECK(back.to_json() == j);
  auto j2 = nlohmann::json::parse(j.dump());
  j2["format"] = "other";
  CHECK_THROWS_AS(NgramModel::from_json(j2), SchemaError);
}

TEST_CASE("vocabulary order does not depend on insertion order") {
  Vocabulary a({"z", "b", "a", "b"});
  Vocabulary b({"a", "z", "b"});
  CHECK(a.tokens() == b.tokens());
  CHECK(a.id("</s>") == kEos);
  CHECK(a.id("missing") == Vocabulary::kUnk);
}

TEST_CASE("distribution helpers") {
  auto full = TokenDistribution::full({0.25, 0.25, 0.5, 0.0});
  CHECK(full.argmax() == 2);
  CHECK(TokenDistribution::full({0.4, 0.4, 0.2}).argmax() == 0);
  auto top = TokenDistribution::top_k({3, 1}, {0.6, 0.3}, 10);
  CHECK(top.k() == 2);
  CHECK(top.prob(3) == doctest::Approx(0.6));
  CHECK(top.prob(2) == 0.0);
  CHECK(top.argmax() == 3);
  CHECK(top.mass() == doctest::Approx(0.9));
}

TEST_CASE("sampling is deterministic per seed and greedy ignores it") {
  auto d = TokenDistribution::full({0.2, 0.3, 0.5});
  DecodeParams sample{.greedy = false, .temperature = 1.0, .seed = 11};
  std::vector<TokenId> a, b;
  for (std::size_t s = 0; s < 50; ++s) {
    a.push_back(choose_token(d, sample, 99, s));
    b.push_back(choose_token(d, sample, 99, s));
  }
  CHECK(a == b);
  CHECK(std::set<TokenId>(a.begin(), a.end()).size() > 1);
  CHECK(choose_token(d, {}, 1, 0) == 2);
}

TEST_CASE("prompt serialization is stable") {
  PromptContext ctx;
  ctx.add(Role::system, "S", "system").add(Role::user, "U", "question").set_assistant_prefix("A");
  ctx.set_assistant_prefix("AB");
  CHECK(ctx.assistant_prefix() == "AB");
  CHECK(ctx.segments().size() == 3);
  CHECK(ctx.serialize() == PromptContext(ctx).serialize());
  CHECK(ctx.user_text().find("U") != std::string::npos);
  CHECK(ctx.has_label("question"));
  CHECK_FALSE(ctx.has_label("document"));
}

TEST_CASE("composite backend routes generation and scoring") {
  auto tb = std::make_shared<TableBackend>(std::vector<std::string>{"</s>", "A"});
  CompositeBackend cb(tb, [](const PromptContext&) { return std::string("generated"); });
  CHECK(cb.generate_text(question_ctx(), {}) == "generated");
  CHECK(cb.propose_window(question_ctx(), 3, {}).ended);
  CHECK(cb.descriptor().kind == "mock");
  CHECK(cb.descriptor().tokenizer_id == tb->descriptor().tokenizer_id);
}
