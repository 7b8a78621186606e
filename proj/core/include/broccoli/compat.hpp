#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "broccoli/text.hpp"

namespace broccoli {

/// Reading assumptions for turning token distances into days.
struct CoverageConfig {
    double alpha = 0.9;                 ///< share of corpus tokens covered by the lemma set, in (0, 1]
    double reading_speed = 200.0;       ///< words per minute
    double reading_hours_per_day = 3.0;
    double percentile = 90.0;           ///< in (0, 100]

    /// Throws ContractViolation when a field is out of range.
    void validate() const;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based,
/// clamped to [1, n]). Throws ContractViolation for an empty list or p outside
/// (0, 100].
double nearest_rank_percentile(std::span<const double> values, double p);

/// Token distance -> reading days under the configured speed and daily hours.
double tokens_to_days(double tokens, const CoverageConfig& config);

/// Smallest prefix of lemmas, by frequency descending then lemma ascending,
/// whose occurrences make up at least `alpha` of the corpus.
std::vector<Lemma> coverage_lemma_set(std::span<const Lemma> corpus, double alpha);

/// Percentile of the day-converted gaps between consecutive occurrences of
/// `lemma`; empty when the lemma occurs fewer than two times.
std::optional<double> lemma_revisitation(std::span<const Lemma> corpus, const Lemma& lemma,
                                         const CoverageConfig& config);

struct RevisitationResult {
    std::optional<double> days;    ///< empty when no member of the set recurs
    std::size_t vocab_size = 0;    ///< |L_alpha|
    std::size_t excluded = 0;      ///< members with fewer than two occurrences
    std::size_t tokens = 0;        ///< corpus length
};

/// Frequency table and occurrence positions of a lemma sequence, built once so
/// that sweeps over alpha do not rescan the corpus.
class CorpusIndex {
public:
    explicit CorpusIndex(std::span<const Lemma> corpus);

    std::size_t tokens() const noexcept { return tokens_; }
    std::size_t distinct() const noexcept { return entries_.size(); }

    std::vector<Lemma> coverage_set(double alpha) const;

    /// Percentile, over the members of the coverage set, of each member's
    /// revisitation time.
    RevisitationResult revisitation(const CoverageConfig& config) const;

private:
    struct Entry {
        Lemma lemma;
        std::vector<std::uint64_t> positions;
    };
    std::size_t prefix_length(double alpha) const;

    std::size_t tokens_ = 0;
    std::vector<Entry> entries_;  ///< frequency descending, lemma ascending
};

RevisitationResult corpus_revisitation(std::span<const Lemma> corpus, const CoverageConfig& config);

/// Lemmas of the word tokens of a text; punctuation and numbers are dropped.
std::vector<Lemma> lemma_stream(std::string_view text, const Lemmatizer& lemmatizer = default_lemmatizer());

/// The body between the "*** START OF" and "*** END OF" marker lines of a
/// Project Gutenberg e-text, or the whole text when the markers are missing.
std::string_view strip_gutenberg_boilerplate(std::string_view text);

}  // namespace broccoli
