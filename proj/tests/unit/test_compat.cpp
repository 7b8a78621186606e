#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "broccoli/compat.hpp"
#include "broccoli/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace broccoli;

namespace {

std::vector<Lemma> lemmas(const std::string& text) {
    std::vector<Lemma> out;
    std::istringstream in(text);
    std::string w;
    while (in >> w) out.emplace_back(w);
    return out;
}

std::vector<std::string> names(const std::vector<Lemma>& ls) {
    std::vector<std::string> out;
    for (const auto& l : ls) out.push_back(l.str());
    return out;
}

// Coverage set, per-lemma gaps and both percentiles recomputed from first
// principles.
std::optional<double> oracle_revisitation(const std::vector<Lemma>& corpus, const CoverageConfig& cfg,
                                          std::size_t* vocab = nullptr) {
    std::map<std::string, std::vector<std::size_t>> positions;
    for (std::size_t i = 0; i < corpus.size(); ++i) positions[corpus[i].str()].push_back(i);
    std::vector<std::pair<std::string, std::size_t>> freq;
    for (const auto& [l, p] : positions) freq.emplace_back(l, p.size());
    std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::size_t covered = 0, members = 0;
    while (members < freq.size() &&
           static_cast<double>(covered) < cfg.alpha * static_cast<double>(corpus.size())) {
        covered += freq[members++].second;
    }
    if (vocab) *vocab = members;
    std::vector<double> per_lemma;
    for (std::size_t m = 0; m < members; ++m) {
        const auto& p = positions[freq[m].first];
        if (p.size() < 2) continue;
        std::vector<double> gaps;
        for (std::size_t i = 1; i < p.size(); ++i)
            gaps.push_back(static_cast<double>(p[i] - p[i - 1]) / cfg.reading_speed / (cfg.reading_hours_per_day * 60));
        per_lemma.push_back(testing::sorted_percentile(gaps, cfg.percentile));
    }
    if (per_lemma.empty()) return std::nullopt;
    return testing::sorted_percentile(per_lemma, cfg.percentile);
}

std::vector<Lemma> zipf_corpus(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
    std::vector<double> w(vocab);
    for (std::size_t i = 0; i < vocab; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::vector<Lemma> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back("w" + std::to_string(pick(rng)));
    return out;
}

}  // namespace

TEST_SUITE("compat") {

TEST_CASE("coverage sets") {
    CHECK(names(coverage_lemma_set(lemmas("a a a b b c"), 0.5)) == std::vector<std::string>{"a"});
    CHECK(names(coverage_lemma_set(lemmas("a a a b b c"), 0.8)) == std::vector<std::string>{"a", "b"});
    CHECK(names(coverage_lemma_set(lemmas("a a b b c"), 0.4)) == std::vector<std::string>{"a"});
    CHECK(names(coverage_lemma_set(lemmas("b b a a c"), 0.4)) == std::vector<std::string>{"a"});
    CHECK(names(coverage_lemma_set(lemmas("a a a b b c"), 1.0)) == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(coverage_lemma_set(lemmas("a"), 0.0), ContractViolation);
    CHECK_THROWS_AS(coverage_lemma_set(lemmas("a"), 1.5), ContractViolation);
}

TEST_CASE("coverage sets grow with alpha") {
    std::mt19937_64 rng(1);
    const auto corpus = zipf_corpus(rng, 5000, 400);
    const CorpusIndex index(corpus);
    std::vector<Lemma> prev;
    for (double a = 0.05; a <= 1.0; a += 0.05) {
        const auto now = index.coverage_set(a);
        REQUIRE(now.size() >= prev.size());
        CHECK(std::equal(prev.begin(), prev.end(), now.begin()));
        prev = now;
    }
}

TEST_CASE("alternating lemmas revisit every two tokens") {
    const auto r = lemma_revisitation(lemmas("a b a b a b"), Lemma("a"), {});
    REQUIRE(r);
    CHECK(*r == doctest::Approx(2.0 / 200 / 180));
    CHECK(*r == doctest::Approx(5.5555555e-5));
    CHECK(tokens_to_days(2, {}) == *r);
}

TEST_CASE("a single occurrence has no revisitation") {
    CHECK_FALSE(lemma_revisitation(lemmas("a b c"), Lemma("a"), {}));
    CHECK_FALSE(lemma_revisitation(lemmas("a b c"), Lemma("z"), {}));
}

TEST_CASE("nearest-rank P90 of gaps 1 1 1 1 100") {
    std::string text = "a a a a a";
    for (int i = 0; i < 99; ++i) text += " b";
    text += " a";
    const auto r = lemma_revisitation(lemmas(text), Lemma("a"), {});
    REQUIRE(r);
    CHECK(*r == tokens_to_days(100, {}));

    const std::vector<double> gaps{1, 1, 1, 1, 100};
    CHECK(nearest_rank_percentile(gaps, 90) == 100);
    CHECK(nearest_rank_percentile(gaps, 80) == 1);
    CHECK(nearest_rank_percentile(gaps, 100) == 100);
}

TEST_CASE("percentile matches the sort-and-count oracle") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> len(1, 60);
    std::uniform_real_distribution<double> value(-5, 5);
    std::uniform_real_distribution<double> pct(0.001, 100);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = std::round(value(rng) * 4) / 4;
        const double p = trial % 5 == 0 ? 10.0 * (1 + trial % 10) : pct(rng);
        CHECK(nearest_rank_percentile(v, p) == testing::sorted_percentile(v, p));
    }
    const std::vector<double> empty;
    CHECK_THROWS_AS(nearest_rank_percentile(empty, 90), ContractViolation);
    const std::vector<double> one{1};
    CHECK_THROWS_AS(nearest_rank_percentile(one, 0), ContractViolation);
}

TEST_CASE("identical gaps everywhere") {
    std::string text;
    for (int i = 0; i < 50; ++i) text += "a b c ";
    const auto r = corpus_revisitation(lemmas(text), {1.0, 200, 3, 90});
    REQUIRE(r.days);
    CHECK(*r.days == tokens_to_days(3, {}));
    CHECK(r.vocab_size == 3);
    CHECK(r.excluded == 0);
    CHECK(r.tokens == 150);
}

TEST_CASE("a tiny alpha keeps only the most frequent lemma") {
    const auto corpus = lemmas("a b a c a b a d a");
    const auto r = corpus_revisitation(corpus, {0.1, 200, 3, 90});
    CHECK(r.vocab_size == 1);
    CHECK(r.days == lemma_revisitation(corpus, Lemma("a"), {0.1, 200, 3, 90}));
}

TEST_CASE("members seen once are excluded and counted") {
    const auto r = corpus_revisitation(lemmas("a a b c"), {1.0, 200, 3, 90});
    CHECK(r.vocab_size == 3);
    CHECK(r.excluded == 2);
    REQUIRE(r.days);
    CHECK(*r.days == tokens_to_days(1, {}));

    const auto none = corpus_revisitation(lemmas("a b c"), {1.0, 200, 3, 90});
    CHECK_FALSE(none.days);
    CHECK(none.excluded == 3);
}

TEST_CASE("corpus revisitation matches the oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> alpha(0.05, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const auto corpus = zipf_corpus(rng, 200 + static_cast<std::size_t>(trial) * 40, 50 + trial * 3);
        const CoverageConfig cfg{alpha(rng), 150.0 + trial, 2.5, trial % 2 ? 90.0 : 50.0};
        std::size_t vocab = 0;
        const auto expected = oracle_revisitation(corpus, cfg, &vocab);
        const auto got = corpus_revisitation(corpus, cfg);
        CHECK(got.vocab_size == vocab);
        REQUIRE(got.days.has_value() == expected.has_value());
        if (expected) CHECK(*got.days == doctest::Approx(*expected).epsilon(1e-12));
    }
}

TEST_CASE("halving speed or daily hours doubles every value") {
    std::mt19937_64 rng(4);
    const auto corpus = zipf_corpus(rng, 20000, 800);
    const CorpusIndex index(corpus);
    for (const double a : {0.5, 0.7, 0.9}) {
        const auto base = index.revisitation({a, 200, 3, 90});
        const auto slow = index.revisitation({a, 100, 3, 90});
        const auto brief = index.revisitation({a, 200, 1.5, 90});
        REQUIRE(base.days);
        CHECK(*slow.days == 2 * *base.days);
        CHECK(*brief.days == 2 * *base.days);
        for (const auto& l : index.coverage_set(a)) {
            const auto one = lemma_revisitation(corpus, l, {a, 200, 3, 90});
            if (!one) continue;
            CHECK(*lemma_revisitation(corpus, l, {a, 100, 3, 90}) == 2 * *one);
        }
    }
}

TEST_CASE("alpha sweep on a book is non-decreasing") {
    const auto text = testing::read_file(testing::data_dir() / "books" / "pg10007_carmilla.txt");
    const CorpusIndex index(lemma_stream(strip_gutenberg_boilerplate(text)));
    CHECK(index.tokens() > 25000);
    double prev = 0;
    for (const double a : {0.5, 0.7, 0.9}) {
        const auto r = index.revisitation({a, 200, 3, 90});
        REQUIRE(r.days);
        CHECK(*r.days >= prev);
        prev = *r.days;
    }
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(CoverageConfig{}.validate());
    CHECK_THROWS_AS((CoverageConfig{0, 200, 3, 90}.validate()), ContractViolation);
    CHECK_THROWS_AS((CoverageConfig{0.9, 0, 3, 90}.validate()), ContractViolation);
    CHECK_THROWS_AS((CoverageConfig{0.9, 200, 25, 90}.validate()), ContractViolation);
    CHECK_THROWS_AS((CoverageConfig{0.9, 200, 3, 0}.validate()), ContractViolation);
}

TEST_CASE("lemma streams drop punctuation and numbers") {
    CHECK(names(lemma_stream("The cats, 42 of them, ran!")) ==
          std::vector<std::string>{"the", "cat", "of", "them", "run"});
}

TEST_CASE("gutenberg boilerplate") {
    const std::string text = "Header line\n*** START OF THIS PROJECT GUTENBERG EBOOK X ***\nBody text.\n"
                             "*** END OF THIS PROJECT GUTENBERG EBOOK X ***\nLicense.\n";
    const auto body = strip_gutenberg_boilerplate(text);
    CHECK(body.find("Body text.") != std::string_view::npos);
    CHECK(body.find("Header") == std::string_view::npos);
    CHECK(body.find("License") == std::string_view::npos);
    CHECK(strip_gutenberg_boilerplate("plain text") == "plain text");
}

}  // TEST_SUITE
