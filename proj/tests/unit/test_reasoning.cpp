#include <doctest.h>

#include "s2k/error.hpp"
#include "s2k/jsonl.hpp"
#include "s2k/mock.hpp"
#include "s2k/reasoning.hpp"

using namespace s2k;

namespace {

std::string fixture(const std::string& name) { return read_file(std::string(S2K_FIXTURE_DIR) + "/" + name); }

std::vector<QuestionChunkPair> make_n(std::size_t n) {
  static const std::vector<std::string> topics = {"tide", "river", "marsh", "storm", "levee", "oyster",
                                                  "heron", "silt", "sluice", "dune", "plume", "reed"};
  std::vector<QuestionChunkPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = topics[i % topics.size()];
    out.push_back({"q" + std::to_string(i), "c" + std::to_string(i), "How does the " + t + " change in spring?",
                   "The " + t + " changes in spring.\nIt also shifts in " + topics[(i + 1) % topics.size()] + "."});
  }
  return out;
}

std::shared_ptr<TableBackend> synthetic_backend(int* calls = nullptr) {
  auto tb = std::make_shared<TableBackend>(std::vector<std::string>{"</s>"});
  tb->responder([calls](const PromptContext& ctx) {
    if (calls) ++*calls;
    return synthetic_reply(ctx);
  });
  return tb;
}

}  // namespace

TEST_CASE("reasoning type names") {
  CHECK(parse_reasoning_type("case") == ReasoningType::case_based);
  CHECK(parse_reasoning_type(" Deductive ") == ReasoningType::deductive);
  CHECK(to_string(ReasoningType::case_based) == "case_based");
  CHECK_THROWS_AS(parse_reasoning_type("abductive"), UnknownReasoningType);
}

TEST_CASE("prompt lists the numbered pairs") {
  auto pairs = make_n(2);
  auto p = build_reasoning_prompt(ReasoningType::deductive, pairs).user_text();
  CHECK(p.find("1. How does the tide change in spring? (Text: The tide changes in spring. It also shifts in river.)") !=
        std::string::npos);
  CHECK(p.find("2. How does the river change") != std::string::npos);
  CHECK(p.find("four options (A, B, C, D)") != std::string::npos);

  auto ten = build_reasoning_prompt(ReasoningType::inductive, make_n(10)).user_text();
  std::size_t last = 0;
  for (int i = 1; i <= 10; ++i) {
    auto at = ten.find("\n" + std::to_string(i) + ". How does");
    REQUIRE(at != std::string::npos);
    CHECK(at >= last);
    last = at;
  }
  CHECK_THROWS_AS(build_reasoning_prompt(ReasoningType::deductive, {}), PreconditionError);
  CHECK_THROWS_AS(build_reasoning_prompt(ReasoningType::deductive, make_n(11)), PreconditionError);
}

TEST_CASE("worked example outputs parse") {
  auto ind = parse_reasoning_response(ReasoningType::inductive, fixture("inductive_output.txt"));
  CHECK(ind.options.size() == 4);
  CHECK(ind.options['A'] == "CD20");
  CHECK(ind.options['D'] == "CD56");
  CHECK(ind.gold == "D");
  CHECK(ind.question.rfind("In a suburban town", 0) == 0);

  auto ded = parse_reasoning_response(ReasoningType::deductive, fixture("deductive_output.txt"));
  CHECK(ded.options['D'] == "Right axis deviation");
  CHECK(ded.gold == "D");
  CHECK(ded.question.rfind("A 6-month-old girl", 0) == 0);

  auto cb = parse_reasoning_response(ReasoningType::case_based, fixture("case_output.txt"));
  CHECK(cb.gold == "The cause of the sheep's condition is a parasitic infestation affecting the nervous system");
  CHECK(cb.options.empty());
  CHECK(cb.question.find("sheep farmer") != std::string::npos);
}

TEST_CASE("malformed multiple-choice replies are rejected") {
  CHECK_THROWS_AS(parse_reasoning_response(ReasoningType::deductive, "Stem?\nA. x\nB. y\nC. z\nCorrect Answer: A"),
                  MalformedGeneration);
  CHECK_THROWS_AS(parse_reasoning_response(ReasoningType::deductive, "Stem?\nA. x\nB. y\nC. z\nD. w"),
                  MalformedGeneration);
  CHECK_THROWS_AS(
      parse_reasoning_response(ReasoningType::deductive, "Stem?\nA. x\nB. y\nC. z\nD. w\nCorrect Answer: E"),
      MalformedGeneration);
  CHECK_THROWS_AS(parse_reasoning_response(ReasoningType::inductive, "A. x\nB. y\nC. z\nD. w\nCorrect Answer: B"),
                  MalformedGeneration);
  CHECK_THROWS_AS(parse_reasoning_response(ReasoningType::case_based, "Why?\nCorrect Answer:   "),
                  MalformedGeneration);
}

TEST_CASE("markdown decoration and wrapped options are tolerated") {
  auto qa = parse_reasoning_response(ReasoningType::deductive,
                                     "**Question:** Which gate?\n- A) North\n- B) South\n  gate\nC: East\nD. West\n"
                                     "**Correct Answer:** B");
  CHECK(qa.question == "Which gate?");
  CHECK(qa.options['B'] == "South gate");
  CHECK(qa.options['C'] == "East");
  CHECK(qa.gold == "B");
}

TEST_CASE("one seed yields one item per type") {
  auto pairs = make_n(12);
  auto idx = build_pair_index(pairs);
  auto backend = synthetic_backend();
  std::map<ReasoningType, std::size_t> used;
  auto r = generate_for_seed(pairs[0], pairs, idx, *backend, {}, used);
  REQUIRE(r.items.size() == 3);
  std::set<ReasoningType> types;
  for (const auto& qa : r.items) {
    types.insert(qa.type);
    CHECK(qa.source_pair_ids.size() == 10);
    CHECK(std::find(qa.source_pair_ids.begin(), qa.source_pair_ids.end(), "q0") == qa.source_pair_ids.end());
  }
  CHECK(types.size() == 3);
  CHECK(r.items[0].qa_id == "q0/deductive");
  CHECK(r.failures.empty());
}

TEST_CASE("quotas limit generation per type") {
  auto pairs = make_n(12);
  auto idx = build_pair_index(pairs);
  auto backend = synthetic_backend();
  ReasoningOptions opts;
  opts.quota = {{ReasoningType::deductive, 1}, {ReasoningType::inductive, 0}, {ReasoningType::case_based, 0}};
  opts.max_seeds = 4;
  std::size_t total = 0;
  for (const auto& r : generate_reasoning_set(pairs, idx, *backend, opts)) {
    for (const auto& qa : r.items) CHECK(qa.type == ReasoningType::deductive);
    total += r.items.size();
  }
  CHECK(total == 1);
}

TEST_CASE("small corpora use whatever pairs exist") {
  auto pairs = make_n(4);
  auto idx = build_pair_index(pairs);
  auto backend = synthetic_backend();
  std::map<ReasoningType, std::size_t> used;
  auto r = generate_for_seed(pairs[1], pairs, idx, *backend, {}, used);
  CHECK(r.retrieved.size() == 3);
  for (const auto& qa : r.items) CHECK(qa.source_pair_ids.size() == 3);

  auto lonely = make_n(1);
  auto r1 = generate_for_seed(lonely[0], lonely, build_pair_index(lonely), *backend, {}, used);
  CHECK(r1.items.empty());
  CHECK(r1.failures.size() == 3);
}

TEST_CASE("malformed generations are retried, then recorded") {
  auto pairs = make_n(5);
  auto idx = build_pair_index(pairs);
  int calls = 0;
  auto bad = std::make_shared<TableBackend>(std::vector<std::string>{"</s>"});
  bad->responder([&](const PromptContext&) {
    ++calls;
    return std::string("no options here");
  });
  ReasoningOptions opts;
  opts.types = {ReasoningType::inductive};
  opts.max_retries = 2;
  std::map<ReasoningType, std::size_t> used;
  auto r = generate_for_seed(pairs[0], pairs, idx, *bad, opts, used);
  CHECK(calls == 3);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].error.rfind("MalformedGeneration", 0) == 0);
}

TEST_CASE("random sampling is seeded and excludes the seed") {
  auto pairs = make_n(30);
  auto idx = build_pair_index(pairs);
  ReasoningOptions opts;
  opts.sampling = SamplingMode::random;
  opts.seed = 9;
  auto a = sample_pairs(pairs[3], pairs, idx, opts);
  auto b = sample_pairs(pairs[3], pairs, idx, opts);
  CHECK(a == b);
  REQUIRE(a.size() == 10);
  std::set<std::string> ids;
  for (const auto& p : a) {
    ids.insert(p.pair_id);
    CHECK(p.pair_id != "q3");
  }
  CHECK(ids.size() == 10);
  opts.seed = 10;
  CHECK_FALSE(sample_pairs(pairs[3], pairs, idx, opts) == a);
}

TEST_CASE("reasoning JSON round trip") {
  auto qa = parse_reasoning_response(ReasoningType::inductive, fixture("inductive_output.txt"));
  qa.qa_id = "q/inductive";
  qa.source_pair_ids = {"a", "b"};
  auto back = reasoning_qa_from_json(to_json(qa));
  CHECK(back.options == qa.options);
  CHECK(back.gold == "D");
  CHECK(back.type == ReasoningType::inductive);
  CHECK_THROWS_AS(reasoning_qa_from_json({{"qa_id", "x"}}), SchemaError);
}

TEST_CASE("pairs need their chunks") {
  std::vector<MetaQuestion> qs = {{"q", "missing", "Q?", ""}};
  CHECK_THROWS_AS(make_pairs(qs, {}), PreconditionError);
}
