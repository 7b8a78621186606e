#include "broccoli/compat.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "broccoli/error.hpp"

namespace broccoli {

void CoverageConfig::validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw ContractViolation("alpha must lie in (0, 1]");
    if (!(reading_speed > 0) || !std::isfinite(reading_speed)) throw ContractViolation("reading speed must be positive");
    if (!(reading_hours_per_day > 0 && reading_hours_per_day <= 24))
        throw ContractViolation("reading hours per day must lie in (0, 24]");
    if (!(percentile > 0 && percentile <= 100)) throw ContractViolation("percentile must lie in (0, 100]");
}

double nearest_rank_percentile(std::span<const double> values, double p) {
    if (values.empty()) throw ContractViolation("percentile of an empty list");
    if (!(p > 0 && p <= 100)) throw ContractViolation("percentile must lie in (0, 100]");
    const auto n = values.size();
    // p * n first keeps integral products exact (90 * 10 / 100 == 9).
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

double tokens_to_days(double tokens, const CoverageConfig& config) {
    const double minutes = tokens / config.reading_speed;
    return minutes / (config.reading_hours_per_day * 60.0);
}

CorpusIndex::CorpusIndex(std::span<const Lemma> corpus) : tokens_(corpus.size()) {
    std::unordered_map<std::string_view, std::size_t> slot;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto [it, inserted] = slot.try_emplace(corpus[i].str(), entries_.size());
        if (inserted) entries_.push_back({corpus[i], {}});
        entries_[it->second].positions.push_back(i);
    }
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        if (a.positions.size() != b.positions.size()) return a.positions.size() > b.positions.size();
        return a.lemma < b.lemma;
    });
}

std::size_t CorpusIndex::prefix_length(double alpha) const {
    if (!(alpha > 0 && alpha <= 1)) throw ContractViolation("alpha must lie in (0, 1]");
    const auto total = static_cast<double>(tokens_);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        covered += entries_[i].positions.size();
        if (static_cast<double>(covered) / total >= alpha) return i + 1;
    }
    return entries_.size();
}

std::vector<Lemma> CorpusIndex::coverage_set(double alpha) const {
    const auto n = prefix_length(alpha);
    std::vector<Lemma> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(entries_[i].lemma);
    return out;
}

RevisitationResult CorpusIndex::revisitation(const CoverageConfig& config) const {
    config.validate();
    RevisitationResult result;
    result.tokens = tokens_;
    if (tokens_ == 0) return result;
    result.vocab_size = prefix_length(config.alpha);

    std::vector<double> per_lemma;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < result.vocab_size; ++i) {
        const auto& pos = entries_[i].positions;
        if (pos.size() < 2) {
            ++result.excluded;
            continue;
        }
        gaps.clear();
        for (std::size_t k = 1; k < pos.size(); ++k)
            gaps.push_back(tokens_to_days(static_cast<double>(pos[k] - pos[k - 1]), config));
        per_lemma.push_back(nearest_rank_percentile(gaps, config.percentile));
    }
    if (!per_lemma.empty()) result.days = nearest_rank_percentile(per_lemma, config.percentile);
    return result;
}

std::vector<Lemma> coverage_lemma_set(std::span<const Lemma> corpus, double alpha) {
    if (corpus.empty()) return {};
    return CorpusIndex(corpus).coverage_set(alpha);
}

std::optional<double> lemma_revisitation(std::span<const Lemma> corpus, const Lemma& lemma,
                                         const CoverageConfig& config) {
    config.validate();
    std::vector<double> gaps;
    std::optional<std::size_t> previous;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i] != lemma) continue;
        if (previous) gaps.push_back(tokens_to_days(static_cast<double>(i - *previous), config));
        previous = i;
    }
    if (gaps.empty()) return std::nullopt;
    return nearest_rank_percentile(gaps, config.percentile);
}

RevisitationResult corpus_revisitation(std::span<const Lemma> corpus, const CoverageConfig& config) {
    return CorpusIndex(corpus).revisitation(config);
}

std::vector<Lemma> lemma_stream(std::string_view text, const Lemmatizer& lemmatizer) {
    std::vector<Lemma> out;
    for (const auto& t : tokenize(text)) {
        if (t.is_word()) out.push_back(lemmatizer.lemmatize(t.surface));
    }
    return out;
}

std::string_view strip_gutenberg_boilerplate(std::string_view text) {
    const auto start = text.find("*** START OF");
    if (start == std::string_view::npos) return text;
    const auto body = text.find('\n', start);
    if (body == std::string_view::npos) return text;
    auto end = text.find("*** END OF", body);
    if (end == std::string_view::npos) end = text.size();
    return text.substr(body + 1, end - body - 1);
}

}  // namespace broccoli
