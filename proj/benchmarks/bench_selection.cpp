#include <benchmark/benchmark.h>

#include <random>

#include "broccoli/selector.hpp"

using namespace broccoli;

static std::vector<CandidateOccurrence> random_candidates(std::size_t lemmas, std::size_t occurrences) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, lemmas - 1);
    std::uniform_real_distribution<double> unit(0, 1);
    std::vector<CandidateOccurrence> out(occurrences);
    for (std::size_t i = 0; i < occurrences; ++i) {
        out[i].token_index = i;
        out[i].lemma = Lemma("w" + std::to_string(pick(rng)));
        out[i].scores.recall = unit(rng);
        out[i].scores.guessability = unit(rng);
        out[i].scores.boost = 1 + 4 * unit(rng);
    }
    return out;
}

static void BM_ScoreAndSelect(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto candidates = random_candidates(n / 4 + 1, n);
    for (auto _ : state) {
        score_candidates(candidates);
        benchmark::DoNotOptimize(select(candidates, {0.1, {}}, n * 2));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}
BENCHMARK(BM_ScoreAndSelect)->Range(64, 1 << 16);
