#include <doctest.h>

#include <fstream>

#include "s2k/config.hpp"
#include "s2k/error.hpp"
#include "s2k_test_support.hpp"

using namespace s2k;

namespace {

std::string config_error(std::string_view toml) {
  try {
    parse_config(toml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  auto c = parse_config("");
  CHECK(c.fusion.window == 10);
  CHECK(c.fusion.margin == doctest::Approx(0.07));
  CHECK(c.fusion.max_length == 512);
  CHECK(c.retrieval.k == 10);
  CHECK(c.retrieval.k1 == doctest::Approx(1.2));
  CHECK(c.retrieval.b == doctest::Approx(0.75));
  CHECK(c.retrieval.types.size() == 3);
  CHECK(c.metrics.k == 5);
  CHECK(c.backend.kind == "mock");
  CHECK(to_json(c) == to_json(validate_config("")));
}

TEST_CASE("errors name the field") {
  CHECK(config_error("[fusion]\nW = 0\n").rfind("fusion.W", 0) == 0);
  CHECK(config_error("[fusion]\nW = 8\nL = 4\n").rfind("fusion.L", 0) == 0);
  CHECK(config_error("[fusion]\nwindow = 3\n").rfind("fusion.window: unknown key", 0) == 0);
  CHECK(config_error("[fusoin]\nW = 3\n").rfind("fusoin", 0) == 0);
  CHECK(config_error("[retrieval]\nk = 11\n").rfind("retrieval.k", 0) == 0);
  CHECK(config_error("[retrieval]\nb = 1.5\n").rfind("retrieval.b", 0) == 0);
  CHECK(config_error("[retrieval]\ntypes = ['abductive']\n").rfind("retrieval.types", 0) == 0);
  CHECK(config_error("[retrieval.quota]\nabductive = 1\n").rfind("retrieval.quota.abductive", 0) == 0);
  CHECK(config_error("[backend]\nkind = 'gpu'\n").rfind("backend.kind", 0) == 0);
  CHECK(config_error("[backend]\nkind = 'remote'\n").rfind("backend.base_url", 0) == 0);
  CHECK(config_error("[corpus]\nbudget = 'big'\n").rfind("corpus.budget", 0) == 0);
  CHECK(config_error("[run]\nthreads = 0\n").rfind("run.threads", 0) == 0);
  CHECK_FALSE(config_error("not toml [").empty());
}

TEST_CASE("values are read from every section") {
  auto c = parse_config(R"(
[corpus]
input = "docs"
budget = 200
[fusion]
W = 4
C = -inf
L = 40
[retrieval]
k = 3
sampling = "random"
types = ["case", "deductive"]
max_seeds = 7
[retrieval.quota]
deductive = 2
[metrics]
k = 8
[backend]
kind = "ngram"
cache_weight = 0.25
[run]
seed = 99
threads = 3
out_dir = "out"
)",
                        "/base");
  CHECK(c.corpus.input == "/base/docs");
  CHECK(c.run.out_dir == "/base/out");
  CHECK(c.corpus.budget == 200);
  CHECK(c.fusion.window == 4);
  CHECK(std::isinf(c.fusion.margin));
  CHECK(c.fusion.margin < 0);
  CHECK(c.retrieval.sampling == SamplingMode::random);
  CHECK(c.retrieval.types == std::vector<ReasoningType>{ReasoningType::case_based, ReasoningType::deductive});
  CHECK(c.retrieval.quota.at(ReasoningType::deductive) == 2);
  CHECK(c.metrics.k == 8);
  CHECK(c.backend.cache_weight == 0.25);
  CHECK(c.run.seed == 99);
  CHECK(to_json(c)["fusion"]["C"] == "-inf");
}

TEST_CASE("config files resolve paths next to themselves") {
  testing::TempDir dir;
  std::ofstream(dir.file("s2k.toml")) << "[corpus]\ninput = 'corpus.jsonl'\n";
  auto c = validate_config(dir.file("s2k.toml"));
  CHECK(c.corpus.input == (dir.path() / "corpus.jsonl").string());
  CHECK_THROWS_AS(validate_config(dir.file("missing.toml")), ConfigError);
}

TEST_CASE("bundled config is valid") {
  auto c = validate_config(std::string(S2K_DATA_DIR) + "/s2k.toml");
  CHECK(c.corpus.budget == 160);
  CHECK(c.backend.kind == "mock");
}
