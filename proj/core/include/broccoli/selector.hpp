#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "broccoli/text.hpp"

namespace broccoli {

struct SelectionConfig {
    double density = 0.1;                   ///< target fraction of word tokens to translate, in [0, 1]
    std::optional<std::size_t> max_lemmas;  ///< optional cap on chosen lemmas

    void validate() const;
};

struct ChosenLemma {
    Lemma lemma;
    double priority = 0.0;
    std::size_t occurrences = 0;

    friend bool operator==(const ChosenLemma&, const ChosenLemma&) = default;
};

struct SelectionResult {
    std::vector<ChosenLemma> chosen_lemmas;                ///< in selection order
    std::vector<CandidateOccurrence> chosen_occurrences;   ///< in document order
    std::vector<Lemma> rejected_lemmas;                    ///< skipped because the filter refused them
    double achieved_density = 0.0;
};

/// P = R + G - RG: probability of understanding a word either from memory or
/// from context, treating the two as independent. Throws ContractViolation
/// when R or G lies outside [0, 1].
double understanding_probability(double recall, double guessability);

/// P * gamma.
inline double priority(double understanding, double boost) noexcept { return understanding * boost; }

/// Derives `understanding` and `priority` from the scores already on each
/// occurrence.
void score_candidates(std::span<CandidateOccurrence> candidates);

struct LemmaPriority {
    Lemma lemma;
    double priority = 0.0;  ///< max over the lemma's occurrences
    std::size_t occurrences = 0;
};

/// Lemmas by priority descending, ties by lemma ascending.
std::vector<LemmaPriority> rank_lemmas(std::span<const CandidateOccurrence> candidates);

/// Decides whether a lemma can actually be used (e.g. all its occurrences
/// translate). Refused lemmas are skipped and selection continues.
using LemmaFilter = std::function<bool(const Lemma&)>;

/// Greedy selection: walks lemmas in rank order, taking every occurrence of
/// each, until the translated share of `total_word_tokens` reaches the target
/// density, the candidates run out, or `max_lemmas` is hit.
SelectionResult select(std::span<const CandidateOccurrence> candidates, const SelectionConfig& config,
                       std::size_t total_word_tokens, const LemmaFilter& accept = {});

}  // namespace broccoli
