#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "broccoli/text.hpp"

namespace broccoli {

/// A sentence of a tokenized document together with the document index of its
/// first token, so occurrences (which carry document indices) can be located.
struct SentenceView {
    std::span<const Token> tokens;
    std::size_t first_token_index = 0;

    /// Slices the sentence with the given index out of a document.
    static SentenceView of(std::span<const Token> document, std::size_t sentence_index);

    /// Surfaces joined by single spaces; the lookup key for aligned fixtures.
    std::string normalized_text() const;
};

enum Capability : unsigned {
    kLemmaLookup = 1u << 0,
    kAlignedSentence = 1u << 1,
};

/// Source of target-language surfaces for selected occurrences.
///
/// Implementations must tolerate concurrent calls. `translate` throws
/// MissingTranslation when it has nothing for the occurrence and
/// ProviderUnavailable on transient failure.
class TranslationProvider {
public:
    virtual ~TranslationProvider() = default;
    virtual unsigned capabilities() const noexcept = 0;
    virtual std::string translate(const SentenceView& sentence, const CandidateOccurrence& occurrence) const = 0;
};

/// Checks that the occurrence lies within the sentence, then asks the provider.
std::string translate_occurrence(const TranslationProvider& provider, const SentenceView& sentence,
                                 const CandidateOccurrence& occurrence);

/// Lemma -> target surface lookup.
class DictionaryProvider final : public TranslationProvider {
public:
    DictionaryProvider() = default;
    explicit DictionaryProvider(std::map<std::string, std::string> entries);

    /// TSV `source_lemma<TAB>target_surface`, '#' comments and blank lines
    /// skipped. Duplicate sources keep the last entry and add a warning.
    /// Throws ParseError naming the line for anything but two fields.
    static DictionaryProvider parse(std::istream& in);
    static DictionaryProvider load(const std::filesystem::path& path);

    unsigned capabilities() const noexcept override { return kLemmaLookup; }
    std::string translate(const SentenceView& sentence, const CandidateOccurrence& occurrence) const override;

    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    std::map<std::string, std::string> entries_;
    std::vector<std::string> warnings_;
};

struct AlignmentPair {
    std::size_t source = 0;  ///< token index within the source sentence
    std::size_t target = 0;  ///< token index within the target sentence

    friend bool operator==(const AlignmentPair&, const AlignmentPair&) = default;
};

struct AlignedTranslation {
    std::string target_sentence;
    std::vector<std::string> target_tokens;
    std::vector<AlignmentPair> alignment;
};

/// Replays canned sentence translations with word alignments, the way a
/// machine-translation service returns them. The answer for an occurrence
/// depends only on its sentence's alignment, never on a global word map.
///
/// Fixture file: one record per line,
/// `source sentence<TAB>target sentence<TAB>i-j i-j ...`, indices counting
/// tokens as produced by `tokenize` on each side.
class AlignedFixtureProvider final : public TranslationProvider {
public:
    AlignedFixtureProvider() = default;

    static AlignedFixtureProvider parse(std::istream& in);
    static AlignedFixtureProvider load(const std::filesystem::path& path);

    void add(std::string_view source_sentence, std::string_view target_sentence, std::vector<AlignmentPair> alignment);

    unsigned capabilities() const noexcept override { return kAlignedSentence; }

    /// Target tokens aligned to the occurrence, joined with single spaces in
    /// target order.
    std::string translate(const SentenceView& sentence, const CandidateOccurrence& occurrence) const override;

    const AlignedTranslation* find(const SentenceView& sentence) const;
    std::size_t size() const noexcept { return records_.size(); }

private:
    std::map<std::string, AlignedTranslation> records_;
};

/// Bounds the number of concurrent in-flight requests to a wrapped provider.
class BoundedProvider final : public TranslationProvider {
public:
    BoundedProvider(std::shared_ptr<const TranslationProvider> inner, std::ptrdiff_t max_in_flight);

    unsigned capabilities() const noexcept override { return inner_->capabilities(); }
    std::string translate(const SentenceView& sentence, const CandidateOccurrence& occurrence) const override;

private:
    std::shared_ptr<const TranslationProvider> inner_;
    mutable std::counting_semaphore<> slots_;
};

}  // namespace broccoli
