#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "broccoli/text.hpp"

using namespace broccoli;

static void BM_Tokenize(benchmark::State& state) {
    const auto& text = bench_book();
    for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Unit(benchmark::kMillisecond);

static void BM_Lemmatize(benchmark::State& state) {
    const auto doc = tokenize(bench_book());
    const auto& lem = default_lemmatizer();
    std::size_t words = 0;
    for (auto _ : state) {
        for (const auto& t : doc) {
            if (t.kind != TokenKind::word) continue;
            benchmark::DoNotOptimize(lem.lemmatize(t.surface));
            ++words;
        }
    }
    state.SetItemsProcessed(static_cast<int64_t>(words));
}
BENCHMARK(BM_Lemmatize)->Unit(benchmark::kMillisecond);
