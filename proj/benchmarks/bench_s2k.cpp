#include <benchmark/benchmark.h>

#include <random>

#include "bm25_oracle.hpp"
#include "s2k/fusion.hpp"
#include "s2k/ngram.hpp"
#include "s2k/selective.hpp"
#include "s2k_test_support.hpp"
#include "selective_fixture.hpp"

using namespace s2k;
using namespace s2k::testing;

static void BM_Bm25Build(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto docs = random_corpus(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Bm25Index::build(docs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Build)->Arg(1000)->Arg(10000);

static void BM_Bm25Retrieve(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto docs = random_corpus(rng, static_cast<std::size_t>(state.range(0)));
  auto idx = Bm25Index::build(docs);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& probe = docs[i++ % docs.size()];
    benchmark::DoNotOptimize(idx.retrieve_top_k(probe.second, 10, {probe.first}));
  }
}
BENCHMARK(BM_Bm25Retrieve)->Arg(1000)->Arg(10000);

static void BM_FuseTable(benchmark::State& state) {
  auto tb = three_window_backend();
  for (auto _ : state) benchmark::DoNotOptimize(fuse_answer(fixture_question(), fixture_chunk(), {2, 0.07, 64}, tb));
}
BENCHMARK(BM_FuseTable);

static void BM_FuseNgram(benchmark::State& state) {
  auto ng = NgramBackend::from_texts({"The cat sat on the mat. The dog sat on the rug. A cat saw the dog."},
                                     std::make_shared<WordTokenizer>());
  const FusionConfig cfg{.window = 10, .margin = 0.07, .max_length = static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(fuse_answer(fixture_question(), fixture_chunk(), cfg, *ng));
}
BENCHMARK(BM_FuseNgram)->Arg(64)->Arg(512);

static void BM_Entropy(benchmark::State& state) {
  std::mt19937_64 rng(3);
  auto d = random_distribution(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(entropy(d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Entropy)->Arg(1000)->Arg(50000);

BENCHMARK_MAIN();
