#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "qcomp/reranker.hpp"

namespace {

void rerank_passages(benchmark::State& state) {
  const auto vocab = bench::vocabulary(300);
  std::mt19937 rng(3);
  std::vector<qcomp::Passage> passages;
  for (std::int64_t i = 0; i < state.range(0); ++i)
    passages.push_back({static_cast<std::size_t>(i), bench::text(rng, vocab, 120)});
  const auto query = bench::text(rng, vocab, 10);
  const qcomp::LexiconTagger tagger;
  const qcomp::RerankConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::rerank(query, passages, cfg, tagger));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(rerank_passages)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
