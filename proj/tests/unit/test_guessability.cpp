#include <random>
#include <sstream>

#include "broccoli/error.hpp"
#include "broccoli/guessability.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace broccoli;
using testing::brute_force_guess;
using testing::make_tokens;

namespace {

using Sentences = std::vector<std::vector<std::string>>;

const std::vector<std::string> kWords{"cat", "dog", "sky", "tree", "run", "blue", "lamp", "road"};

Sentences random_corpus(std::mt19937_64& rng, std::size_t max_tokens) {
    std::uniform_int_distribution<std::size_t> word(0, kWords.size() - 1);
    std::uniform_int_distribution<std::size_t> sentence_len(1, 12);
    std::uniform_int_distribution<std::size_t> total(1, max_tokens);
    Sentences out;
    std::size_t budget = total(rng);
    while (budget > 0) {
        const std::size_t n = std::min(budget, sentence_len(rng));
        std::vector<std::string> s;
        for (std::size_t i = 0; i < n; ++i) s.push_back(kWords[word(rng)]);
        out.push_back(std::move(s));
        budget -= n;
    }
    return out;
}

NGramModel train(const Sentences& corpus, std::size_t order, double k) {
    const std::vector<std::vector<Token>> docs{make_tokens(corpus)};
    return NGramModel::train(docs, order, k);
}

}  // namespace

TEST_SUITE("guessability") {

TEST_CASE("the toy vocabulary is made of lemmas") {
    for (const auto& w : kWords) CHECK(default_lemmatizer().lemmatize(w).str() == w);
}

TEST_CASE("bigram count over a b a b") {
    const std::vector<std::string> texts{"a b a b"};
    const auto m = NGramModel::train_texts(texts, 2, 1.0);
    CHECK(m.count({"a"}, "b") == 2);
    CHECK(m.count({"b"}, "a") == 1);
    CHECK(m.context_count({"a"}) == 2);
}

TEST_CASE("unigram model has only the empty context") {
    const std::vector<std::string> texts{"a b a b"};
    const auto m = NGramModel::train_texts(texts, 1, 1.0);
    CHECK(m.contexts().size() == 1);
    CHECK(m.contexts().begin()->first.empty());
    CHECK(m.guess({"a"}, "b") == doctest::Approx((2.0 + 1) / (4.0 + 3)));
}

TEST_CASE("order 0 and empty corpora are rejected") {
    const std::vector<std::string> texts{"a b"};
    CHECK_THROWS_AS(NGramModel::train_texts(texts, 0, 1.0), ContractViolation);
    const std::vector<std::string> empty{"", "  "};
    CHECK_THROWS_AS(NGramModel::train_texts(empty, 2, 1.0), Error);
}

TEST_CASE("cat after the") {
    const std::vector<std::string> texts{"the cat sat . the cat ran ."};
    const auto m = NGramModel::train_texts(texts, 2, 1.0);
    CHECK(m.vocab_size() == 6);
    CHECK(m.guess({"the"}, "cat") == 0.375);
    CHECK(m.guess({"the"}, "cat") == brute_force_guess({{"the", "cat", "sat", ".", "the", "cat", "ran", "."}}, 2, 1.0,
                                                       {"the"}, "cat"));
}

TEST_CASE("single token unsmoothed unigram") {
    const std::vector<std::string> texts{"a"};
    const auto m = NGramModel::train_texts(texts, 1, 0.0);
    const auto scores = m.score_tokens(tokenize("a"));
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].value == 1.0);
}

TEST_CASE("an unseen context on its own gives 1 over the vocabulary") {
    const std::vector<std::string> texts{"the cat sat . the cat ran ."};
    const auto m = NGramModel::train_texts(texts, 2, 1.0);
    CHECK(m.probability({"dog"}, "cat") == doctest::Approx(1.0 / 6));
    CHECK(m.probability({"ran"}, "zebra") == doctest::Approx(1.0 / 6));
}

TEST_CASE("backoff uses the longest observed context") {
    const Sentences corpus{{"cat", "dog", "sky"}, {"tree", "dog", "run"}};
    const auto m = train(corpus, 3, 1.0);
    CHECK(m.guess({"cat", "dog"}, "sky") == doctest::Approx((1.0 + 1) / (1.0 + 6)));
    CHECK(m.guess({"road", "dog"}, "sky") == doctest::Approx((1.0 + 1) / (2.0 + 6)));
    CHECK(m.guess({"road", "lamp"}, "sky") == doctest::Approx((1.0 + 1) / (6.0 + 6)));
}

TEST_CASE("scores match the brute-force counter on random corpora") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<std::size_t> order(1, 4);
    const std::vector<double> ks{0.5, 1.0, 2.0, 0.1};
    for (int trial = 0; trial < 40; ++trial) {
        const auto corpus = random_corpus(rng, 100);
        const std::size_t n = order(rng);
        const double k = ks[static_cast<std::size_t>(trial) % ks.size()];
        const auto m = train(corpus, n, k);

        auto query = random_corpus(rng, 40);
        query.push_back({"zebra", "cat", "zebra", "dog"});
        const auto tokens = make_tokens(query);
        const auto scores = m.score_tokens(tokens);
        REQUIRE(scores.size() == tokens.size());
        for (const auto& s : scores) {
            const auto& t = tokens[s.token_index];
            std::vector<std::string> left;
            for (std::size_t i = 0; i < s.token_index; ++i)
                if (tokens[i].sentence_index == t.sentence_index) left.push_back(tokens[i].surface);
            CHECK(s.value == brute_force_guess(corpus, n, k, left, t.surface));
        }
    }
}

TEST_CASE("each context's smoothed distribution sums to one") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = train(random_corpus(rng, 100), 1 + static_cast<std::size_t>(trial) % 4, 0.5 + trial * 0.1);
        for (const auto& [ctx, _] : m.contexts()) {
            double sum = 0;
            for (const auto& w : m.vocabulary()) sum += m.probability(ctx, w);
            CHECK(std::fabs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("more evidence never lowers a probability") {
    Sentences corpus{{"cat", "dog"}, {"cat", "sky"}};
    double prev = train(corpus, 2, 1.0).probability({"cat"}, "dog");
    for (int i = 0; i < 5; ++i) {
        corpus.push_back({"cat", "dog"});
        const double now = train(corpus, 2, 1.0).probability({"cat"}, "dog");
        CHECK(now >= prev);
        prev = now;
    }
}

TEST_CASE("a model scores its own training text above zero") {
    const auto text = testing::read_file(testing::data_dir() / "golden" / "lm_corpus.txt");
    const std::vector<std::string> texts{text};
    const auto m = NGramModel::train_texts(texts, 3, 1.0);
    const auto scores = m.score_tokens(tokenize(text));
    REQUIRE_FALSE(scores.empty());
    for (const auto& s : scores) {
        CHECK(s.value > 0);
        CHECK(s.value <= 1);
    }
}

TEST_CASE("save and load reproduce the model and its scores") {
    const auto text = testing::read_file(testing::data_dir() / "golden" / "lm_corpus.txt");
    const std::vector<std::string> texts{text};
    const auto m = NGramModel::train_texts(texts, 3, 1.0);
    std::stringstream buf;
    m.save(buf);
    const auto back = NGramModel::load(buf);
    CHECK(back == m);
    const auto doc = tokenize(testing::read_file(testing::data_dir() / "golden" / "input.txt"));
    CHECK(back.score_tokens(doc) == m.score_tokens(doc));

    std::stringstream again;
    back.save(again);
    CHECK(again.str() == buf.str());
}

TEST_CASE("the committed golden model is what training produces") {
    const auto text = testing::read_file(testing::data_dir() / "golden" / "lm_corpus.txt");
    const std::vector<std::string> texts{text};
    std::stringstream buf;
    NGramModel::train_texts(texts, 3, 1.0).save(buf);
    CHECK(buf.str() == testing::read_file(testing::data_dir() / "golden" / "model.ngram"));
}

TEST_CASE("malformed model files") {
    std::istringstream no_magic("order\t2\n");
    CHECK_THROWS_AS(NGramModel::load(no_magic), ParseError);
    std::istringstream bad_vocab("# broccoli-ngram 1\norder\t1\nk\t1\nvocab\t5\n\ta\t1\n");
    CHECK_THROWS_AS(NGramModel::load(bad_vocab), ParseError);
    std::istringstream long_ctx("# broccoli-ngram 1\norder\t1\nk\t1\nvocab\t2\nx\ta\t1\n");
    CHECK_THROWS_AS(NGramModel::load(long_ctx), ParseError);
}

TEST_CASE("constant scorer") {
    const ConstantScorer scorer(0.2);
    const auto scores = scorer.score(tokenize("One cat, two dogs."));
    REQUIRE(scores.size() == 4);
    for (const auto& s : scores) CHECK(s.value == 0.2);
    CHECK(scorer.score({}).empty());
    CHECK_THROWS_AS(ConstantScorer(0.0), ContractViolation);
    CHECK_THROWS_AS(ConstantScorer(1.5), ContractViolation);
}

TEST_CASE("n-gram scorer keeps G positive for unsmoothed models") {
    const std::vector<std::string> texts{"the cat sat ."};
    const NGramScorer scorer(std::make_shared<const NGramModel>(NGramModel::train_texts(texts, 2, 0.0)));
    const auto scores = scorer.score(tokenize("the dog sat ."));
    REQUIRE(scores.size() == 3);
    for (const auto& s : scores) CHECK(s.value > 0);
    CHECK(scorer.score({}).empty());
}

}  // TEST_SUITE
