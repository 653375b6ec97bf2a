#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "qcomp/semantic.hpp"

namespace {

void hash_stub_embed(benchmark::State& state) {
  qcomp::HashStubEmbedding backend(256);
  const auto vocab = bench::vocabulary(500);
  std::mt19937 rng(5);
  const auto text = bench::text(rng, vocab, 300);
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::embed(text, backend));
}
BENCHMARK(hash_stub_embed);

void store_search(benchmark::State& state) {
  qcomp::HashStubEmbedding backend(256);
  const auto vocab = bench::vocabulary(500);
  std::mt19937 rng(11);
  qcomp::VectorStore store;
  for (std::int64_t i = 0; i < state.range(0); ++i)
    store.add({"d" + std::to_string(i), qcomp::ArtifactKind::Card, 0}, qcomp::embed(bench::text(rng, vocab, 40), backend));
  const auto query = qcomp::embed(bench::text(rng, vocab, 10), backend);
  for (auto _ : state) benchmark::DoNotOptimize(qcomp::store_search(store, query, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(store_search)->Arg(218)->Arg(5000);

}  // namespace
