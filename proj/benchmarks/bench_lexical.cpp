#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "qcomp/lexical.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> corpus(std::size_t n) {
  const auto vocab = bench::vocabulary(2000);
  std::mt19937 rng(7);
  std::vector<std::pair<std::string, std::string>> docs;
  for (std::size_t i = 0; i < n; ++i) docs.emplace_back("d" + std::to_string(i), bench::text(rng, vocab, 30));
  return docs;
}

void bm25_build_items(benchmark::State& state) {
  const auto docs = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::bm25_build(docs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm25_build_items)->Arg(500)->Arg(5000);

void bm25_score_query(benchmark::State& state) {
  const auto index = qcomp::bm25_build(corpus(static_cast<std::size_t>(state.range(0))));
  const auto vocab = bench::vocabulary(2000);
  std::mt19937 rng(9);
  const auto query = bench::text(rng, vocab, 8);
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::bm25_score(index, query));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm25_score_query)->Arg(500)->Arg(5000);

void keyword_extraction(benchmark::State& state) {
  const qcomp::LexiconTagger tagger;
  const std::string query = "Which films were directed by the person who was born in the city of Lyon and studied art?";
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::extract_keywords_by_pos(query, tagger));
}
BENCHMARK(keyword_extraction);

}  // namespace
