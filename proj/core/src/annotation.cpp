#include "broccoli/annotation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace broccoli {

using nlohmann::json;

namespace {

json segment_json(const Segment& segment) {
    if (const auto* run = std::get_if<TextRun>(&segment)) return json{{"type", "text"}, {"text", run->text}};
    const auto& span = std::get<TranslationSpan>(segment);
    return json{{"type", "translation"},
                {"span_id", span.span_id},
                {"original_text", span.original_text},
                {"target_text", span.target_text},
                {"lemma", span.lemma.str()},
                {"sentence_index", span.sentence_index}};
}

template <typename T>
T field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace

std::string AnnotatedDocument::reconstruct_source() const {
    std::string out;
    for (const auto& s : segments) {
        if (const auto* run = std::get_if<TextRun>(&s)) {
            out += run->text;
        } else {
            out += std::get<TranslationSpan>(s).original_text;
        }
    }
    return out;
}

std::vector<const TranslationSpan*> AnnotatedDocument::spans() const {
    std::vector<const TranslationSpan*> out;
    for (const auto& s : segments) {
        if (const auto* span = std::get_if<TranslationSpan>(&s)) out.push_back(span);
    }
    return out;
}

std::string to_json(const AnnotatedDocument& doc) {
    json segments = json::array();
    for (const auto& s : doc.segments) segments.push_back(segment_json(s));
    json selected = json::array();
    for (const auto& s : doc.meta.selected)
        selected.push_back({{"lemma", s.lemma.str()}, {"priority", s.priority}, {"occurrences", s.occurrences}});
    const json meta{{"learner_id", doc.meta.learner_id},
                    {"target_profile", doc.meta.target_profile},
                    {"density_requested", doc.meta.density_requested},
                    {"density_achieved", doc.meta.density_achieved},
                    {"word_token_count", doc.meta.word_token_count},
                    {"selected", selected},
                    {"warnings", doc.meta.warnings}};
    const json out{{"doc_id", doc.doc_id}, {"segments", segments}, {"meta", meta}};
    return out.dump(2) + "\n";
}

AnnotatedDocument document_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotated document: ") + e.what());
    }
    AnnotatedDocument doc;
    doc.doc_id = field<std::string>(j, "doc_id");
    for (const auto& s : field<json>(j, "segments")) {
        const auto type = field<std::string>(s, "type");
        if (type == "text") {
            doc.segments.emplace_back(TextRun{field<std::string>(s, "text")});
        } else if (type == "translation") {
            doc.segments.emplace_back(TranslationSpan{field<std::size_t>(s, "span_id"),
                                                      field<std::string>(s, "original_text"),
                                                      field<std::string>(s, "target_text"),
                                                      Lemma(field<std::string>(s, "lemma")),
                                                      field<std::size_t>(s, "sentence_index")});
        } else {
            throw ParseError("unknown segment type '" + type + "'");
        }
    }
    const auto meta = field<json>(j, "meta");
    doc.meta.learner_id = field<std::string>(meta, "learner_id");
    doc.meta.target_profile = field<std::string>(meta, "target_profile");
    doc.meta.density_requested = field<double>(meta, "density_requested");
    doc.meta.density_achieved = field<double>(meta, "density_achieved");
    doc.meta.word_token_count = field<std::size_t>(meta, "word_token_count");
    for (const auto& s : field<json>(meta, "selected"))
        doc.meta.selected.push_back({Lemma(field<std::string>(s, "lemma")), field<double>(s, "priority"),
                                     field<std::size_t>(s, "occurrences")});
    doc.meta.warnings = field<std::vector<std::string>>(meta, "warnings");
    return doc;
}

std::string document_id(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "doc-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

AnnotateRequest parse_annotate_request(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("request body must be a JSON object");
    AnnotateRequest req;
    req.learner_id = field<std::string>(j, "learner_id");
    req.text = field<std::string>(j, "text");
    if (j.contains("density")) {
        if (!j["density"].is_number()) throw ParseError("field 'density' must be a number");
        req.density = j["density"].get<double>();
    }
    if (j.contains("target_profile")) req.target_profile = field<std::string>(j, "target_profile");
    if (j.contains("now")) {
        if (!j["now"].is_number()) throw ParseError("field 'now' must be a number of seconds");
        req.now = Timestamp{j["now"].get<double>()};
    }
    return req;
}

Timestamp wall_clock_now() {
    const auto since = std::chrono::system_clock::now().time_since_epoch();
    return Timestamp{std::chrono::duration<double>(since).count()};
}

Annotator::Annotator(AnnotatorResources resources) : resources_(std::move(resources)) {
    if (!resources_.lemmatizer) throw ContractViolation("annotator needs a lemmatizer");
    if (!resources_.scorer) throw ContractViolation("annotator needs a context scorer");
    if (resources_.providers.empty()) throw ContractViolation("annotator needs at least one translation provider");
    resources_.selection.validate();
}

AnnotatedDocument Annotator::annotate(const LearnerState& learner, const AnnotateRequest& request) const {
    SelectionConfig selection = resources_.selection;
    if (request.density) selection.density = *request.density;
    if (!std::isfinite(selection.density) || selection.density < 0 || selection.density > 1)
        throw ContractViolation("density must lie in [0, 1]");

    const std::string profile = request.target_profile.empty() ? std::string(kDefaultProfile) : request.target_profile;
    const auto provider_it = resources_.providers.find(profile);
    if (provider_it == resources_.providers.end())
        throw ContractViolation("unknown target profile '" + profile + "'");
    const TranslationProvider& provider = *provider_it->second;

    const auto tokens = tokenize(request.text);
    if (tokens.empty()) throw EmptyDocument("text contains no tokens");
    const Timestamp now = request.now.value_or(wall_clock_now());

    AnnotatedDocument doc;
    doc.doc_id = document_id(request.text);
    doc.meta.learner_id = request.learner_id;
    doc.meta.target_profile = profile;
    doc.meta.density_requested = selection.density;
    for (const auto& t : tokens) doc.meta.word_token_count += t.is_word() ? 1 : 0;

    CandidateRules rules;
    rules.min_len = resources_.min_len;
    rules.lexicon = resources_.lexicon.empty() ? nullptr : &resources_.lexicon;
    auto set = extract_candidates(tokens, *resources_.lemmatizer, resources_.stoplist, rules);
    auto& candidates = set.candidates;

    std::vector<Lemma> lemmas;
    for (const auto& c : candidates) lemmas.push_back(c.lemma);
    const auto tutor = tutor_scores(learner, lemmas, now);

    std::unordered_map<std::size_t, double> guess;
    for (const auto& g : resources_.scorer->score(tokens)) guess[g.token_index] = g.value;
    for (auto& c : candidates) {
        const auto& t = tutor.at(c.lemma);
        c.scores.recall = t.recall;
        c.scores.boost = t.boost;
        const auto it = guess.find(c.token_index);
        c.scores.guessability = it == guess.end() ? 0.0 : it->second;
    }
    score_candidates(candidates);

    std::map<Lemma, std::vector<const CandidateOccurrence*>> by_lemma;
    for (const auto& c : candidates) by_lemma[c.lemma].push_back(&c);

    // Translate every occurrence of a lemma before accepting it, so a lemma is
    // either fully translated or skipped.
    std::unordered_map<std::size_t, std::string> translations;
    const auto accept = [&](const Lemma& lemma) {
        std::vector<std::pair<std::size_t, std::string>> done;
        for (const auto* occ : by_lemma.at(lemma)) {
            const auto sentence = SentenceView::of(tokens, occ->sentence_index);
            try {
                done.emplace_back(occ->token_index, translate_occurrence(provider, sentence, *occ));
            } catch (const MissingTranslation&) {
                return false;
            }
        }
        for (auto& [index, text] : done) translations[index] = std::move(text);
        return true;
    };
    const auto result = select(candidates, selection, doc.meta.word_token_count, accept);

    doc.meta.density_achieved = result.achieved_density;
    for (const auto& c : result.chosen_lemmas) doc.meta.selected.push_back({c.lemma, c.priority, c.occurrences});
    if (!result.rejected_lemmas.empty()) {
        std::string list;
        for (std::size_t i = 0; i < result.rejected_lemmas.size() && i < 10; ++i)
            list += (i ? ", " : "") + result.rejected_lemmas[i].str();
        if (result.rejected_lemmas.size() > 10) list += ", ...";
        doc.meta.warnings.push_back("no translation for " + std::to_string(result.rejected_lemmas.size()) +
                                    " lemma(s): " + list);
    }

    std::size_t cursor = 0;
    std::size_t span_id = 0;
    for (const auto& occ : result.chosen_occurrences) {
        const Token& tok = tokens[occ.token_index];
        if (tok.begin > cursor) doc.segments.emplace_back(TextRun{request.text.substr(cursor, tok.begin - cursor)});
        doc.segments.emplace_back(TranslationSpan{span_id++, tok.surface, translations.at(occ.token_index), occ.lemma,
                                                  occ.sentence_index});
        cursor = tok.end;
    }
    if (cursor < request.text.size()) doc.segments.emplace_back(TextRun{request.text.substr(cursor)});
    return doc;
}

}  // namespace broccoli
