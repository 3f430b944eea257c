#include <doctest.h>

#include "s2k/error.hpp"
#include "s2k/metaqa.hpp"
#include "s2k/mock.hpp"

using namespace s2k;

namespace {

DocumentChunk chunk(std::string text) {
  DocumentChunk c;
  c.chunk_id = "doc#0";
  c.doc_id = "doc";
  c.text = std::move(text);
  return c;
}

std::string question_of(const std::string& raw) {
  auto r = parse_question_response(raw);
  REQUIRE(std::holds_alternative<MetaQuestion>(r));
  return std::get<MetaQuestion>(r).question;
}

/// Replies from a fixed script, one per call.
class ScriptedBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::shared_ptr<TableBackend> backend() {
    auto tb = std::make_shared<TableBackend>(std::vector<std::string>{"</s>"});
    tb->responder([this](const PromptContext&) { return replies_.at(std::min(calls_++, replies_.size() - 1)); });
    return tb;
  }
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("meta prompt places the chunk after the document header") {
  auto ctx = build_meta_prompt(chunk("Aspirin inhibits COX-1."));
  CHECK(ctx.user_text().find("## Document:\nAspirin inhibits COX-1.") != std::string::npos);
  auto braces = build_meta_prompt(chunk("Set {a, b} and {article_text}."));
  CHECK(braces.user_text().find("Set {a, b} and {article_text}.") != std::string::npos);
  CHECK_THROWS_AS(build_meta_prompt(chunk("  ")), PreconditionError);
}

TEST_CASE("question replies are parsed leniently") {
  CHECK(question_of("```json {\"question\":\"What enzyme does aspirin inhibit?\"}```") ==
        "What enzyme does aspirin inhibit?");
  CHECK(question_of("Sure! Here it is: {\"question\":\"Q?\"} hope that helps") == "Q?");
  CHECK(question_of("{not json} {\"question\": \"Why {x}?\"}") == "Why {x}?");
  CHECK(question_of("{\"other\": 1} {\"question\": \"Second?\"}") == "Second?");
}

TEST_CASE("empty and context-dependent questions are filtered") {
  CHECK(std::holds_alternative<Filtered>(parse_question_response("{\"question\":\"\"}")));
  CHECK(std::holds_alternative<Filtered>(
      parse_question_response("{\"question\":\"What is shown According to the passage?\"}")));
  for (const auto& p : banned_question_phrases()) {
    CHECK(std::holds_alternative<Filtered>(parse_question_response("{\"question\":\"What is " + p + "?\"}")));
  }
}

TEST_CASE("unparseable replies throw") {
  CHECK_THROWS_AS(parse_question_response("no json here"), UnparseableResponse);
  CHECK_THROWS_AS(parse_question_response("{\"question\": 3}"), UnparseableResponse);
  CHECK_THROWS_AS(parse_question_response("{\"question\": \"unterminated"), UnparseableResponse);
}

TEST_CASE("generation retries unparseable replies, then drops") {
  ScriptedBackend s({"garbage", "{\"question\":\"How does the tide turn?\"}"});
  auto b = s.backend();
  auto out = generate_meta_question(chunk("The tide turns."), *b, {.max_retries = 2});
  REQUIRE(out.question);
  CHECK(out.attempts == 2);
  CHECK(out.question->question_id == "doc#0/q");
  CHECK(out.question->chunk_id == "doc#0");

  ScriptedBackend bad({"garbage"});
  auto b2 = bad.backend();
  auto dropped = generate_meta_question(chunk("The tide turns."), *b2, {.max_retries = 2});
  CHECK_FALSE(dropped.question);
  CHECK(dropped.attempts == 3);
  CHECK(dropped.dropped_reason.rfind("unparseable", 0) == 0);
}

TEST_CASE("filtered replies are dropped without retry") {
  ScriptedBackend s({"{\"question\":\"\"}", "{\"question\":\"Late?\"}"});
  auto b = s.backend();
  auto out = generate_meta_question(chunk("Intro."), *b);
  CHECK_FALSE(out.question);
  CHECK(out.attempts == 1);
  CHECK(out.dropped_reason.rfind("filtered", 0) == 0);
}

TEST_CASE("synthetic replies parse as questions") {
  auto raw = synthetic_reply(build_meta_prompt(chunk("Storm surge raises water levels along the estuary.")));
  auto r = parse_question_response(raw);
  CHECK(std::holds_alternative<MetaQuestion>(r));
}

TEST_CASE("question JSON round trip") {
  MetaQuestion q{"c#0/q", "c#0", "Why?", "m"};
  auto back = meta_question_from_json(to_json(q));
  CHECK(back.question == "Why?");
  CHECK_THROWS_AS(meta_question_from_json({{"question_id", "x"}, {"chunk_id", "y"}, {"question", " "}}), SchemaError);
}
