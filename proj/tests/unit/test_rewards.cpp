#include <doctest.h>

#include "reward_fixture.hpp"
#include "s2k/rewards.hpp"

using namespace s2k;

TEST_CASE("six-row reward table") {
  for (const auto& row : testing::reward_table()) {
    CAPTURE(row.text);
    auto r = total_reward(row.text, row.gold);
    CHECK(r.acc == row.acc);
    CHECK(r.fmt == row.fmt);
    CHECK(r.total == row.total);
  }
}

TEST_CASE("format reward") {
  CHECK(format_reward("<think>x</think> ANSWER: B") == 1.0);
  CHECK(format_reward("  \n<think>x</think>\nANSWER: B") == 1.0);
  CHECK(format_reward("<think>x</think> ANSWER: A or ANSWER: B") == -0.5);
  CHECK(format_reward("no think tags, ANSWER: B") == 0.0);
  CHECK(format_reward("<think>x</think> no marker") == 0.0);
  CHECK(format_reward("<think>ANSWER: B</think> done") == 0.0);
  CHECK(format_reward("<think>a</think><think>b</think> ANSWER: B") == 0.0);
  CHECK(format_reward("preamble <think>x</think> ANSWER: B") == 0.0);
  CHECK(format_reward("<think>ANSWER: A</think> ANSWER: B") == -0.5);
  CHECK(format_reward("") == 0.0);
}

TEST_CASE("accuracy reward") {
  CHECK(accuracy_reward("...ANSWER: d", "D") == 5.0);
  CHECK(accuracy_reward("...ANSWER: A ... ANSWER: B", "B") == 5.0);
  CHECK(accuracy_reward("the answer is C", "C") == 0.0);
  CHECK(accuracy_reward("ANSWER: (b)", "B") == 5.0);
  CHECK(accuracy_reward("ANSWER: **B. CD56**", "B") == 5.0);
  CHECK(accuracy_reward("ANSWER: C, A", "A,C") == 5.0);
  CHECK(accuracy_reward("ANSWER: Right axis deviation.", "right axis deviation") == 5.0);
  CHECK(accuracy_reward("ANSWER:", "B") == 0.0);
}

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("d") == "D");
  CHECK(normalize_answer("(B)") == "B");
  CHECK(normalize_answer("A, C") == "AC");
  CHECK(normalize_answer("c and a") == "AC");
  CHECK(normalize_answer("B. because the tide") == "B");
  CHECK(normalize_answer("  The   Tide!  ") == "the tide");
  CHECK(normalize_answer("Apple") == "apple");
  CHECK_FALSE(normalize_answer("  ...  "));
}

TEST_CASE("extraction uses the last marker") {
  CHECK(extract_answer("ANSWER: A\nmore\nANSWER: c") == "C");
  CHECK(extract_answer("ANSWER: B\nexplanation follows") == "B");
  CHECK_FALSE(extract_answer("nothing"));
}

TEST_CASE("breakdown JSON and purity") {
  auto a = total_reward("<think>x</think> ANSWER: B", "B");
  auto b = total_reward("<think>x</think> ANSWER: B", "B");
  CHECK(to_json(a) == to_json(b));
  CHECK(to_json(a)["extracted"] == "B");
  CHECK(to_json(total_reward("none", "B"))["extracted"].is_null());
}
