#include <doctest.h>

#include "s2k/error.hpp"
#include "s2k/jsonl.hpp"
#include "s2k/prompts.hpp"

using namespace s2k;

// Template bytes are part of the data contract; any edit must be deliberate.
TEST_CASE("template bytes are pinned") {
  CHECK(sha256_hex(prompts::kMetaQuestion) == "d68ee9becf0b2defc398dc3b8694837daff891b5ddf616e913278e232742e7a7");
  CHECK(sha256_hex(prompts::kInductive) == "32e8adb88f2fa2225dc6589a6286ff94c83f0c727e3bccf2195567073d39191f");
  CHECK(sha256_hex(prompts::kDeductive) == "06f50d9ebf52c6e7ebd166aebe8a54c2b1246e94f24918876343265680d39b31");
  CHECK(sha256_hex(prompts::kCaseBased) == "1675deebe425b48bb03b02825c1602e726db0a785890d0501e9afca818a106fb");
}

TEST_CASE("every template has exactly its placeholder") {
  auto meta = prompts::render(prompts::kMetaQuestion, {{"article_text", "X"}});
  CHECK(meta.find("## Document:\nX") != std::string::npos);
  CHECK(meta.find("{\n  \"question\"") != std::string::npos);
  for (auto t : {prompts::kInductive, prompts::kDeductive, prompts::kCaseBased}) {
    auto r = prompts::render(t, {{"meta_knowledge_from_sampling", "BLOCK"}});
    CHECK(r.find("BLOCK") != std::string::npos);
  }
  CHECK(prompts::kDeductive.find("four options (A, B, C, D)") != std::string_view::npos);
}

TEST_CASE("substitution is single pass and keeps braces") {
  CHECK(prompts::render("a {x} b", {{"x", "{x} {{y}}"}}) == "a {x} {{y}} b");
  CHECK(prompts::render("{{literal}} {x}", {{"x", "1"}}) == "{literal} 1");
  CHECK_THROWS_AS(prompts::render("{missing}", {}), PreconditionError);
}
