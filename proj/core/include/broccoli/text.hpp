#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace broccoli {

/// Canonical dictionary form of a word: lowercase, non-empty, no surrounding
/// whitespace. Per-word state and scores are keyed by lemma.
class Lemma {
public:
    Lemma() = default;

    /// Lowercases `id` and validates the invariants; throws ContractViolation
    /// on an empty or whitespace-padded id.
    explicit Lemma(std::string_view id);

    const std::string& str() const noexcept { return id_; }
    bool empty() const noexcept { return id_.empty(); }

    friend auto operator<=>(const Lemma&, const Lemma&) = default;
    friend bool operator==(const Lemma&, const Lemma&) = default;

private:
    std::string id_;
};

std::ostream& operator<<(std::ostream& os, const Lemma& lemma);

struct LemmaHash {
    std::size_t operator()(const Lemma& l) const noexcept { return std::hash<std::string>{}(l.str()); }
};

enum class TokenKind { word, punctuation, number };

std::string_view to_string(TokenKind kind) noexcept;

struct Token {
    std::string surface;
    TokenKind kind = TokenKind::word;
    std::size_t begin = 0;  ///< byte offset into the source text
    std::size_t end = 0;    ///< one past the last byte
    std::size_t sentence_index = 0;
    std::string space_before;  ///< whitespace between the previous token (or text start) and this one

    bool is_word() const noexcept { return kind == TokenKind::word; }
};

/// Splits UTF-8 text into word, number and punctuation tokens.
///
/// Words are runs of letters and digits, allowing an inner apostrophe or
/// hyphen between letters ("don't", "well-known"). Numbers start with a digit.
/// Every other non-whitespace code point is a one-character punctuation token.
/// A sentence ends at '.', '!' or '?' (optionally followed by closing quotes or
/// brackets) when whitespace and a capitalized token come next.
std::vector<Token> tokenize(std::string_view text);

/// Rebuilds text from tokens and their recorded leading whitespace.
/// `detokenize(tokenize(s), trailing_space(s)) == s` for any input.
std::string detokenize(std::span<const Token> tokens, std::string_view trailing = {});

/// Whitespace after the final token of `text`.
std::string_view trailing_space(std::string_view text);

/// ASCII and Latin-1 lowercase of a UTF-8 string.
std::string to_lower(std::string_view s);

/// True when the first code point is an uppercase letter.
bool starts_uppercase(std::string_view s) noexcept;

/// Number of code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s) noexcept;

/// Rule-based English lemmatizer: an irregular-form table, then ordered suffix
/// rules (-ies, -es, -s, -ing, -ed), iterated to a fixed point so that
/// lemmatizing a lemma is the identity.
class Lemmatizer {
public:
    using ExceptionTable = std::unordered_map<std::string, std::string>;
    using StemSet = std::unordered_set<std::string>;

    /// Uses the bundled irregular-form table and e-restoring stem list.
    Lemmatizer();
    Lemmatizer(ExceptionTable exceptions, StemSet e_stems);

    /// Parses a `surface<TAB>lemma` table. '#' lines and blank lines are skipped.
    static ExceptionTable parse_exceptions(std::istream& in);
    static ExceptionTable load_exceptions(const std::filesystem::path& path);

    Lemma lemmatize(std::string_view surface) const;

    /// Adds or replaces irregular forms.
    void add_exceptions(const ExceptionTable& extra);

    const ExceptionTable& exceptions() const noexcept { return exceptions_; }

private:
    std::string step(const std::string& word) const;
    std::string restore_stem(std::string stem) const;

    ExceptionTable exceptions_;
    StemSet e_stems_;
};

/// Shared instance built from the bundled tables.
const Lemmatizer& default_lemmatizer();

/// Set of excluded lemmas, one per line in its file form.
class Stoplist {
public:
    Stoplist() = default;
    explicit Stoplist(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    static Stoplist parse(std::istream& in);
    static Stoplist load(const std::filesystem::path& path);
    static const Stoplist& bundled();

    bool contains(std::string_view lemma) const { return words_.contains(std::string(lemma)); }
    void insert(std::string_view lemma) { words_.insert(to_lower(lemma)); }
    std::size_t size() const noexcept { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

/// Scores attached to an occurrence as it moves through the pipeline.
struct CandidateScores {
    double recall = 0.0;         ///< R, from the memory model
    double guessability = 0.0;   ///< G, from the context scorer
    double boost = 1.0;          ///< gamma, half-life boost factor
    double understanding = 0.0;  ///< P = R + G - RG
    double priority = 0.0;       ///< P * gamma
};

struct CandidateOccurrence {
    std::size_t token_index = 0;
    Lemma lemma;
    std::size_t sentence_index = 0;
    CandidateScores scores;
};

enum class ExclusionReason { not_a_word, stopword, too_short, proper_noun };

std::string_view to_string(ExclusionReason reason) noexcept;

struct Exclusion {
    std::size_t token_index = 0;
    ExclusionReason reason = ExclusionReason::not_a_word;
};

struct CandidateSet {
    std::vector<CandidateOccurrence> candidates;
    std::vector<Exclusion> exclusions;  ///< one entry per rejected token, in token order
};

struct CandidateRules {
    std::size_t min_len = 3;
    /// Lowercase words known to be common nouns/verbs; keeps a capitalized
    /// sentence-initial token that does not recur in lowercase in the document.
    const std::unordered_set<std::string>* lexicon = nullptr;
};

/// Filters tokens down to translation candidates. Each rejected token is
/// recorded with the first rule that rejected it, checked in the order
/// not_a_word, stopword, too_short, proper_noun.
CandidateSet extract_candidates(std::span<const Token> tokens, const Lemmatizer& lemmatizer,
                                const Stoplist& stoplist, const CandidateRules& rules = {});

}  // namespace broccoli
