#include <benchmark/benchmark.h>

#include <map>

#include "bench_data.hpp"
#include "broccoli/compat.hpp"
#include "broccoli/guessability.hpp"

using namespace broccoli;

static const NGramModel& book_model(std::size_t order) {
    static std::map<std::size_t, NGramModel> models;
    auto it = models.find(order);
    if (it == models.end()) {
        const std::vector<std::string> texts{std::string(strip_gutenberg_boilerplate(bench_book()))};
        it = models.emplace(order, NGramModel::train_texts(texts, order, 1.0)).first;
    }
    return it->second;
}

static void BM_TrainNGram(benchmark::State& state) {
    const std::vector<std::string> texts{std::string(strip_gutenberg_boilerplate(bench_book()))};
    for (auto _ : state) benchmark::DoNotOptimize(NGramModel::train_texts(texts, static_cast<std::size_t>(state.range(0)), 1.0));
}
BENCHMARK(BM_TrainNGram)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_ScoreTokens(benchmark::State& state) {
    const auto& model = book_model(static_cast<std::size_t>(state.range(0)));
    const auto tokens = tokenize(bench_read("golden/input.txt"));
    for (auto _ : state) benchmark::DoNotOptimize(model.score_tokens(tokens));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * tokens.size()));
}
BENCHMARK(BM_ScoreTokens)->Arg(2)->Arg(3)->Arg(4);
