#include "broccoli/selector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "broccoli/error.hpp"

namespace broccoli {

void SelectionConfig::validate() const {
    if (!(density >= 0 && density <= 1)) throw ContractViolation("density must lie in [0, 1]");
}

double understanding_probability(double recall, double guessability) {
    if (!(recall >= 0 && recall <= 1)) throw ContractViolation("recall probability must lie in [0, 1]");
    if (!(guessability >= 0 && guessability <= 1)) throw ContractViolation("guessability must lie in [0, 1]");
    return recall + guessability - recall * guessability;
}

void score_candidates(std::span<CandidateOccurrence> candidates) {
    for (auto& c : candidates) {
        c.scores.understanding = understanding_probability(c.scores.recall, c.scores.guessability);
        c.scores.priority = priority(c.scores.understanding, c.scores.boost);
    }
}

std::vector<LemmaPriority> rank_lemmas(std::span<const CandidateOccurrence> candidates) {
    std::map<Lemma, LemmaPriority> by_lemma;
    for (const auto& c : candidates) {
        auto [it, inserted] = by_lemma.try_emplace(c.lemma, LemmaPriority{c.lemma, c.scores.priority, 0});
        if (!inserted) it->second.priority = std::max(it->second.priority, c.scores.priority);
        ++it->second.occurrences;
    }
    std::vector<LemmaPriority> ranked;
    ranked.reserve(by_lemma.size());
    for (auto& [_, lp] : by_lemma) ranked.push_back(std::move(lp));
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const LemmaPriority& a, const LemmaPriority& b) { return a.priority > b.priority; });
    return ranked;
}

SelectionResult select(std::span<const CandidateOccurrence> candidates, const SelectionConfig& config,
                       std::size_t total_word_tokens, const LemmaFilter& accept) {
    config.validate();
    SelectionResult result;
    if (total_word_tokens == 0) return result;

    const auto total = static_cast<double>(total_word_tokens);
    std::size_t chosen_tokens = 0;
    std::set<Lemma> chosen;

    for (const auto& lp : rank_lemmas(candidates)) {
        if (static_cast<double>(chosen_tokens) / total >= config.density) break;
        if (config.max_lemmas && result.chosen_lemmas.size() >= *config.max_lemmas) break;
        if (accept && !accept(lp.lemma)) {
            result.rejected_lemmas.push_back(lp.lemma);
            continue;
        }
        result.chosen_lemmas.push_back({lp.lemma, lp.priority, lp.occurrences});
        chosen.insert(lp.lemma);
        chosen_tokens += lp.occurrences;
    }

    for (const auto& c : candidates) {
        if (chosen.contains(c.lemma)) result.chosen_occurrences.push_back(c);
    }
    std::sort(result.chosen_occurrences.begin(), result.chosen_occurrences.end(),
              [](const CandidateOccurrence& a, const CandidateOccurrence& b) { return a.token_index < b.token_index; });
    result.achieved_density = static_cast<double>(chosen_tokens) / total;
    return result;
}

}  // namespace broccoli
