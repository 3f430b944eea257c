#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "reward_fixture.hpp"
#include "s2k/jsonl.hpp"
#include "s2k/rewards.hpp"
#include "s2k_test_support.hpp"

using namespace s2k;
using namespace s2k::testing;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  std::string cmd = std::string(S2K_TOOL) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("score-reward matches the library on every table row") {
  TempDir dir;
  {
    std::ofstream in(dir.file("t.jsonl"));
    for (const auto& row : reward_table()) in << nlohmann::json{{"text", row.text}, {"gold", row.gold}}.dump() << "\n";
  }
  auto r = run("score-reward --in " + dir.file("t.jsonl") + " --out " + dir.file("r.jsonl"));
  REQUIRE(r.code == 0);
  auto lines = read_jsonl(dir.file("r.jsonl"));
  auto rows = reward_table();
  REQUIRE(lines.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(lines[i] == to_json(total_reward(rows[i].text, rows[i].gold)));
    CHECK(lines[i]["total"] == rows[i].total);
  }
  auto stdout_run = run("score-reward --in " + dir.file("t.jsonl"));
  CHECK(stdout_run.code == 0);
  CHECK(stdout_run.out == read_file(dir.file("r.jsonl")));
}

TEST_CASE("eval writes a report") {
  TempDir dir;
  std::ofstream(dir.file("g.jsonl")) << R"({"question_id":"a","gold":"B","answers":["B","C","B","C","A"]})" << "\n"
                                     << R"({"question_id":"b","gold":"C","answers":["A","A","A","A","C"]})" << "\n";
  auto r = run("eval --in " + dir.file("g.jsonl") + " --k 5 --report " + dir.file("rep.json"));
  REQUIRE(r.code == 0);
  auto rep = nlohmann::json::parse(read_file(dir.file("rep.json")));
  CHECK(rep["avg@5"] == doctest::Approx(0.3));
  CHECK(rep["cons@5"] == doctest::Approx(0.5));
  CHECK(rep["pass@5"] == doctest::Approx(1.0));
}

TEST_CASE("chunk subcommand") {
  TempDir dir;
  auto r = run("chunk -q --in " + std::string(S2K_DATA_DIR) + "/corpus.jsonl --clean-rules " +
               std::string(S2K_DATA_DIR) + "/clean_rules.toml --budget 160 --out " + dir.file("c.jsonl"));
  REQUIRE(r.code == 0);
  CHECK(read_jsonl(dir.file("c.jsonl")).size() == 50);
}

TEST_CASE("configuration errors exit with status 2") {
  TempDir dir;
  std::ofstream(dir.file("bad.toml")) << "[fusion]\nW = 0\n";
  auto r = run("run-all --config " + dir.file("bad.toml"));
  CHECK(r.code == 2);
  CHECK(r.out.find("fusion.W") != std::string::npos);
  CHECK(run("score-reward --in " + dir.file("missing.jsonl")).code == 1);
}
