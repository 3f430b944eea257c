#include <doctest.h>

#include <cstdio>
#include <set>

#include "bm25_oracle.hpp"

using namespace s2k;
using namespace s2k::testing;

namespace {

void check_same(const std::vector<ScoredPair>& got, const std::vector<ScoredPair>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].pair_id == want[i].pair_id);
    CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("analyzer lowercases and drops stopwords") {
  TermAnalyzer an;
  CHECK(an.terms("The Tide, and THE river-bed 42!") == std::vector<std::string>{"tide", "river", "bed", "42"});
}

TEST_CASE("queries sharing no terms score zero") {
  auto idx = Bm25Index::build({{"a", "tide river"}, {"b", "marsh salt"}, {"c", "heron oyster"}});
  for (double s : idx.score_all("volcano glacier")) CHECK(s == 0.0);
}

TEST_CASE("smoothed idf on a single-document corpus") {
  auto idx = Bm25Index::build({{"only", "tide tide river"}});
  CHECK(idx.idf("tide") == doctest::Approx(std::log(1 + 0.5 / 1.5)));
  CHECK(idx.idf("absent") == doctest::Approx(std::log(1 + 1.5 / 0.5)));
  CHECK(idx.idf("tide") >= 0);
  auto s = idx.score_all("tide");
  // tf = 2, |D| = avgdl: idf · 2 · 2.2 / (2 + 1.2).
  CHECK(s[0] == doctest::Approx(std::log(4.0 / 3.0) * 2 * 2.2 / 3.2));
}

TEST_CASE("rebuilding gives identical postings") {
  std::mt19937_64 rng(1);
  auto docs = random_corpus(rng, 40);
  auto a = Bm25Index::build(docs);
  auto b = Bm25Index::build(docs);
  CHECK(a.doc_lengths() == b.doc_lengths());
  CHECK(a.avgdl() == b.avgdl());
  REQUIRE(a.postings().size() == b.postings().size());
  for (const auto& [t, list] : a.postings()) {
    const auto& other = b.postings().at(t);
    REQUIRE(list.size() == other.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      CHECK(list[i].doc == other[i].doc);
      CHECK(list[i].tf == other[i].tf);
    }
  }
}

TEST_CASE("top-10 equals brute force on a 100-pair corpus") {
  std::mt19937_64 rng(2);
  auto docs = random_corpus(rng, 100);
  auto idx = Bm25Index::build(docs);
  check_same(idx.retrieve_top_k("tide surge levee", 10), brute_force_top_k(docs, "tide surge levee", 10));
}

TEST_CASE("top-10 equals brute force on random corpora") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto docs = random_corpus(rng, 1 + rng() % 300);
    auto idx = Bm25Index::build(docs);
    const auto& probe = docs[rng() % docs.size()];
    std::string query = probe.second.substr(0, probe.second.size() / 2);
    check_same(idx.retrieve_top_k(query, 10, {probe.first}), brute_force_top_k(docs, query, 10, {probe.first}));
  }
}

TEST_CASE("k larger than the corpus returns everything ranked") {
  auto idx = Bm25Index::build({{"b", "tide"}, {"a", "tide"}, {"c", "river"}});
  auto r = idx.retrieve_top_k("tide rises", 50);
  REQUIRE(r.size() == 3);
  CHECK(r[0].pair_id == "a");
  CHECK(r[1].pair_id == "b");
  CHECK(r[2].pair_id == "c");
  CHECK(r[2].score == 0.0);
}

TEST_CASE("a pair whose text equals the query is excluded") {
  std::vector<std::pair<std::string, std::string>> docs = {
      {"self", "storm surge levee"}, {"near", "storm surge"}, {"far", "levee"}};
  auto idx = Bm25Index::build(docs);
  auto r = idx.retrieve_top_k("storm surge levee", 3);
  REQUIRE(r.size() == 2);
  CHECK(r[0].pair_id == "near");
  auto by_id = idx.retrieve_top_k("storm surge", 3, {"near"});
  for (const auto& p : by_id) CHECK(p.pair_id != "near");
}

TEST_CASE("parameters change scores") {
  std::vector<std::pair<std::string, std::string>> docs = {{"a", "tide tide tide river marsh"}, {"b", "tide"}};
  auto flat = Bm25Index::build(docs, {.k1 = 1.2, .b = 0.0});
  auto full = Bm25Index::build(docs, {.k1 = 1.2, .b = 1.0});
  CHECK(flat.score_all("tide")[1] != full.score_all("tide")[1]);
  check_same(full.retrieve_top_k("tide", 2), brute_force_top_k(docs, "tide", 2, {}, {.k1 = 1.2, .b = 1.0}));
}
