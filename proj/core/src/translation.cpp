#include "broccoli/translation.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "broccoli/error.hpp"

namespace broccoli {

namespace {

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string join_surfaces(std::span<const Token> tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t.surface;
    }
    return out;
}

}  // namespace

SentenceView SentenceView::of(std::span<const Token> document, std::size_t sentence_index) {
    const auto first = std::find_if(document.begin(), document.end(),
                                    [&](const Token& t) { return t.sentence_index == sentence_index; });
    const auto last = std::find_if(first, document.end(),
                                   [&](const Token& t) { return t.sentence_index != sentence_index; });
    const auto offset = static_cast<std::size_t>(first - document.begin());
    return {document.subspan(offset, static_cast<std::size_t>(last - first)), offset};
}

std::string SentenceView::normalized_text() const { return join_surfaces(tokens); }

std::string translate_occurrence(const TranslationProvider& provider, const SentenceView& sentence,
                                 const CandidateOccurrence& occurrence) {
    if (occurrence.token_index < sentence.first_token_index ||
        occurrence.token_index >= sentence.first_token_index + sentence.tokens.size())
        throw ContractViolation("occurrence of '" + occurrence.lemma.str() + "' lies outside the given sentence");
    return provider.translate(sentence, occurrence);
}

// ---------------------------------------------------------------- dictionary

DictionaryProvider::DictionaryProvider(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {
    for (const auto& [src, tgt] : entries_) {
        if (tgt.empty()) throw ContractViolation("empty translation for '" + src + "'");
    }
}

DictionaryProvider DictionaryProvider::parse(std::istream& in) {
    DictionaryProvider p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split_tabs(view);
        if (fields.size() != 2)
            throw ParseError("dictionary: expected source_lemma<TAB>target_surface, got " +
                                 std::to_string(fields.size()) + " fields",
                             line_no);
        const auto source = trim(fields[0]);
        const auto target = trim(fields[1]);
        if (source.empty() || target.empty()) throw ParseError("dictionary: empty field", line_no);
        const std::string key = to_lower(source);
        if (p.entries_.contains(key))
            p.warnings_.push_back("duplicate dictionary entry '" + key + "' on line " + std::to_string(line_no) +
                                  " replaces the earlier one");
        p.entries_[key] = std::string(target);
    }
    return p;
}

DictionaryProvider DictionaryProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dictionary " + path.string());
    return parse(in);
}

std::string DictionaryProvider::translate(const SentenceView&, const CandidateOccurrence& occurrence) const {
    const auto it = entries_.find(occurrence.lemma.str());
    if (it == entries_.end()) throw MissingTranslation("no dictionary entry for '" + occurrence.lemma.str() + "'");
    return it->second;
}

// ------------------------------------------------------------ aligned fixture

void AlignedFixtureProvider::add(std::string_view source_sentence, std::string_view target_sentence,
                                 std::vector<AlignmentPair> alignment) {
    const auto source_tokens = tokenize(source_sentence);
    const auto target_tokens = tokenize(target_sentence);
    AlignedTranslation record;
    record.target_sentence = std::string(target_sentence);
    for (const auto& t : target_tokens) record.target_tokens.push_back(t.surface);
    for (const auto& pair : alignment) {
        if (pair.source >= source_tokens.size() || pair.target >= target_tokens.size())
            throw ContractViolation("alignment pair " + std::to_string(pair.source) + "-" +
                                    std::to_string(pair.target) + " outside the sentence");
    }
    record.alignment = std::move(alignment);
    records_[join_surfaces(source_tokens)] = std::move(record);
}

AlignedFixtureProvider AlignedFixtureProvider::parse(std::istream& in) {
    AlignedFixtureProvider p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) throw ParseError("aligned fixture: expected source<TAB>target<TAB>alignment", line_no);
        std::vector<AlignmentPair> pairs;
        std::istringstream al{std::string(fields[2])};
        std::string item;
        while (al >> item) {
            const auto dash = item.find('-');
            try {
                if (dash == std::string::npos) throw std::invalid_argument(item);
                std::size_t used_s = 0, used_t = 0;
                const auto s = std::stoul(item.substr(0, dash), &used_s);
                const auto t = std::stoul(item.substr(dash + 1), &used_t);
                if (used_s != dash || used_t != item.size() - dash - 1) throw std::invalid_argument(item);
                pairs.push_back({s, t});
            } catch (const std::logic_error&) {
                throw ParseError("aligned fixture: bad alignment pair '" + item + "'", line_no);
            }
        }
        try {
            p.add(fields[0], fields[1], std::move(pairs));
        } catch (const ContractViolation& e) {
            throw ParseError(std::string("aligned fixture: ") + e.what(), line_no);
        }
    }
    return p;
}

AlignedFixtureProvider AlignedFixtureProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open aligned fixture " + path.string());
    return parse(in);
}

const AlignedTranslation* AlignedFixtureProvider::find(const SentenceView& sentence) const {
    const auto it = records_.find(sentence.normalized_text());
    return it == records_.end() ? nullptr : &it->second;
}

std::string AlignedFixtureProvider::translate(const SentenceView& sentence,
                                              const CandidateOccurrence& occurrence) const {
    const auto* record = find(sentence);
    if (!record) throw MissingTranslation("no aligned translation for sentence: " + sentence.normalized_text());
    const std::size_t local = occurrence.token_index - sentence.first_token_index;
    std::set<std::size_t> targets;
    for (const auto& pair : record->alignment) {
        if (pair.source == local) targets.insert(pair.target);
    }
    if (targets.empty()) throw MissingTranslation("'" + occurrence.lemma.str() + "' is not aligned to any target token");
    std::string out;
    for (const auto t : targets) {
        if (!out.empty()) out += ' ';
        out += record->target_tokens[t];
    }
    return out;
}

// ------------------------------------------------------------------- bounded

BoundedProvider::BoundedProvider(std::shared_ptr<const TranslationProvider> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight) {
    if (!inner_) throw ContractViolation("BoundedProvider needs a provider");
    if (max_in_flight < 1) throw ContractViolation("max_in_flight must be at least 1");
}

std::string BoundedProvider::translate(const SentenceView& sentence, const CandidateOccurrence& occurrence) const {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_->translate(sentence, occurrence);
}

}  // namespace broccoli
