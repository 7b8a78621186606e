#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "broccoli/text.hpp"

namespace broccoli {

/// Probability of guessing the word at `token_index` from its left context.
struct GuessabilityScore {
    std::size_t token_index = 0;
    double value = 0.0;  ///< G in (0, 1]

    friend bool operator==(const GuessabilityScore&, const GuessabilityScore&) = default;
};

/// Scores every word-kind token of a document, in token order.
class ContextScorer {
public:
    virtual ~ContextScorer() = default;
    virtual std::vector<GuessabilityScore> score(std::span<const Token> tokens) const = 0;
};

/// Same guessability for every word; the random-context ablation arm.
class ConstantScorer final : public ContextScorer {
public:
    explicit ConstantScorer(double value);
    std::vector<GuessabilityScore> score(std::span<const Token> tokens) const override;

private:
    double value_;
};

inline constexpr std::string_view kUnknownWord = "<unk>";
inline constexpr std::string_view kSentenceStart = "<s>";

/// Language-model key of a token: the lemma for words, the lowercased
/// surface for punctuation and numbers.
std::string lm_key(const Token& token, const Lemmatizer& lemmatizer);

/// Add-k smoothed n-gram counts with backoff to the longest seen context.
///
/// Immutable once trained; safe for concurrent reads.
class NGramModel {
public:
    using Context = std::vector<std::string>;

    struct ContextCounts {
        std::uint64_t total = 0;
        std::map<std::string, std::uint64_t> next;

        friend bool operator==(const ContextCounts&, const ContextCounts&) = default;
    };

    /// Counts every context length 0..order-1 over each sentence, padded on
    /// the left with sentence-start markers. Throws ContractViolation when
    /// order is 0 or k is negative and Error when the corpus has no tokens.
    static NGramModel train(std::span<const std::vector<Token>> corpus, std::size_t order, double smoothing_k,
                            const Lemmatizer& lemmatizer = default_lemmatizer());

    /// Convenience: tokenizes each text first.
    static NGramModel train_texts(std::span<const std::string> texts, std::size_t order, double smoothing_k,
                                  const Lemmatizer& lemmatizer = default_lemmatizer());

    std::size_t order() const noexcept { return order_; }
    double smoothing_k() const noexcept { return k_; }
    /// Includes the unknown-word entry.
    std::size_t vocab_size() const noexcept { return vocab_.size(); }
    const std::set<std::string>& vocabulary() const noexcept { return vocab_; }
    const std::map<Context, ContextCounts>& contexts() const noexcept { return contexts_; }

    bool in_vocab(std::string_view key) const { return vocab_.contains(std::string(key)); }
    std::uint64_t count(const Context& context, std::string_view key) const;
    std::uint64_t context_count(const Context& context) const;

    /// (count(ctx, w) + k) / (count(ctx) + k * |V|) at exactly this context;
    /// out-of-vocabulary words map to the unknown entry.
    double probability(const Context& context, std::string_view key) const;

    /// Backs off from the (order-1)-word context to shorter ones until a
    /// context with observations is found.
    double guess(const Context& left_context, std::string_view key) const;

    /// G for each word-kind token, using the token's sentence as left context.
    std::vector<GuessabilityScore> score_tokens(std::span<const Token> tokens,
                                                const Lemmatizer& lemmatizer = default_lemmatizer()) const;

    /// Line-based count file: a header with order, k and vocabulary size, then
    /// `context<TAB>lemma<TAB>count` lines (context words space-separated).
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static NGramModel load(std::istream& in);
    static NGramModel load(const std::filesystem::path& path);

    friend bool operator==(const NGramModel&, const NGramModel&) = default;

private:
    NGramModel(std::size_t order, double k) : order_(order), k_(k) {}
    std::string normalize(std::string_view key) const;

    std::size_t order_ = 1;
    double k_ = 1.0;
    std::set<std::string> vocab_;
    std::map<Context, ContextCounts> contexts_;
};

/// Adapts an NGramModel to the scorer interface. Guessability is clamped
/// below at `floor` so that unsmoothed (k = 0) models still yield G > 0.
class NGramScorer final : public ContextScorer {
public:
    explicit NGramScorer(std::shared_ptr<const NGramModel> model, const Lemmatizer& lemmatizer = default_lemmatizer(),
                         double floor = 1e-12);
    std::vector<GuessabilityScore> score(std::span<const Token> tokens) const override;

    const NGramModel& model() const noexcept { return *model_; }

private:
    std::shared_ptr<const NGramModel> model_;
    const Lemmatizer& lemmatizer_;
    double floor_;
};

}  // namespace broccoli
