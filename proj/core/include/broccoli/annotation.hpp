#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "broccoli/error.hpp"
#include "broccoli/guessability.hpp"
#include "broccoli/memory.hpp"
#include "broccoli/selector.hpp"
#include "broccoli/text.hpp"
#include "broccoli/translation.hpp"

namespace broccoli {

/// Source text copied verbatim between translation spans.
struct TextRun {
    std::string text;

    friend bool operator==(const TextRun&, const TextRun&) = default;
};

/// One translated token. `original_text` is the exact source slice it stands for.
struct TranslationSpan {
    std::size_t span_id = 0;
    std::string original_text;
    std::string target_text;
    Lemma lemma;
    std::size_t sentence_index = 0;

    friend bool operator==(const TranslationSpan&, const TranslationSpan&) = default;
};

using Segment = std::variant<TextRun, TranslationSpan>;

struct SelectedLemma {
    Lemma lemma;
    double priority = 0.0;
    std::size_t occurrences = 0;

    friend bool operator==(const SelectedLemma&, const SelectedLemma&) = default;
};

struct DocumentMeta {
    std::string learner_id;
    std::string target_profile;
    double density_requested = 0.0;
    double density_achieved = 0.0;
    std::size_t word_token_count = 0;
    std::vector<SelectedLemma> selected;  ///< in selection order
    std::vector<std::string> warnings;

    friend bool operator==(const DocumentMeta&, const DocumentMeta&) = default;
};

struct AnnotatedDocument {
    std::string doc_id;
    std::vector<Segment> segments;
    DocumentMeta meta;

    /// Runs concatenated with every span's original text put back.
    std::string reconstruct_source() const;
    std::vector<const TranslationSpan*> spans() const;

    friend bool operator==(const AnnotatedDocument&, const AnnotatedDocument&) = default;
};

/// Wire form shared by the command line and the HTTP service.
std::string to_json(const AnnotatedDocument& doc);
/// Throws ParseError on malformed input.
AnnotatedDocument document_from_json(std::string_view json);

/// 64-bit FNV-1a of the text, as "doc-" followed by 16 hex digits.
std::string document_id(std::string_view text);

/// The text has no tokens at all.
class EmptyDocument : public Error {
public:
    using Error::Error;
};

struct AnnotateRequest {
    std::string learner_id;
    std::string text;
    std::optional<double> density;  ///< falls back to the annotator's default
    std::string target_profile;     ///< empty selects the default provider
    std::optional<Timestamp> now;   ///< wall clock when absent
};

/// Parses the POST /v1/annotate body. Throws ParseError for malformed JSON or
/// wrongly typed fields.
AnnotateRequest parse_annotate_request(std::string_view json);

inline constexpr std::string_view kDefaultProfile = "default";

/// Everything the pipeline needs besides the learner's memory.
struct AnnotatorResources {
    std::shared_ptr<const Lemmatizer> lemmatizer{std::shared_ptr<const Lemmatizer>{}, &default_lemmatizer()};
    Stoplist stoplist = Stoplist::bundled();
    std::unordered_set<std::string> lexicon;
    std::size_t min_len = 3;
    std::shared_ptr<const ContextScorer> scorer;
    std::map<std::string, std::shared_ptr<const TranslationProvider>, std::less<>> providers;
    SelectionConfig selection;
};

/// tokenize -> candidates -> tutor scores -> guessability -> select -> translate.
///
/// Stateless across calls and safe to share between threads. Never records
/// exposures; that happens only when read events arrive.
class Annotator {
public:
    explicit Annotator(AnnotatorResources resources);

    /// Throws ContractViolation for a density outside [0, 1] or an unknown
    /// target profile, EmptyDocument for text without tokens, and lets
    /// ProviderUnavailable through.
    AnnotatedDocument annotate(const LearnerState& learner, const AnnotateRequest& request) const;

    const AnnotatorResources& resources() const noexcept { return resources_; }

private:
    AnnotatorResources resources_;
};

Timestamp wall_clock_now();

}  // namespace broccoli
