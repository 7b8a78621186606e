#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "broccoli/compat.hpp"

using namespace broccoli;

static void BM_LemmaStream(benchmark::State& state) {
    const auto body = strip_gutenberg_boilerplate(bench_book());
    for (auto _ : state) benchmark::DoNotOptimize(lemma_stream(body));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * body.size()));
}
BENCHMARK(BM_LemmaStream)->Unit(benchmark::kMillisecond);

static void BM_CorpusRevisitation(benchmark::State& state) {
    const auto lemmas = lemma_stream(strip_gutenberg_boilerplate(bench_book()));
    const CoverageConfig cfg{0.9, 200, 3, 90};
    for (auto _ : state) benchmark::DoNotOptimize(corpus_revisitation(lemmas, cfg));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * lemmas.size()));
}
BENCHMARK(BM_CorpusRevisitation)->Unit(benchmark::kMillisecond);

static void BM_IndexedAlphaSweep(benchmark::State& state) {
    const CorpusIndex index(lemma_stream(strip_gutenberg_boilerplate(bench_book())));
    for (auto _ : state)
        for (const double a : {0.5, 0.7, 0.9}) benchmark::DoNotOptimize(index.revisitation({a, 200, 3, 90}));
}
BENCHMARK(BM_IndexedAlphaSweep)->Unit(benchmark::kMillisecond);
