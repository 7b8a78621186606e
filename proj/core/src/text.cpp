#include "broccoli/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "broccoli/error.hpp"
#include "bundled_data.hpp"

namespace broccoli {

namespace {

struct CodePoint {
    char32_t value;
    std::size_t length;
};

// Invalid sequences decode as a single byte with its raw value.
CodePoint decode(std::string_view s, std::size_t i) noexcept {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) return {b0, 1};
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0)
            return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
    return {b0, 1};
}

bool is_space(char32_t c) noexcept {
    switch (c) {
        case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000: case 0xFEFF: case 0x200B: case 0x200C: case 0x200D:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_digit(char32_t c) noexcept { return c >= '0' && c <= '9'; }

bool is_letter(char32_t c) noexcept {
    if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (c < 0xC0) return c == 0xAA || c == 0xB5 || c == 0xBA;
    if (c == 0xD7 || c == 0xF7) return false;
    if (c >= 0x2000 && c <= 0x2BFF) return false;  // punctuation, symbols, arrows
    if (c >= 0x3000 && c <= 0x303F) return false;
    if (c >= 0xFE30 && c <= 0xFE6F) return false;
    if (c >= 0xFF01 && c <= 0xFF0F) return false;
    if (c >= 0x1F000) return false;  // emoji and pictographs
    return true;
}

bool is_apostrophe(char32_t c) noexcept { return c == '\'' || c == 0x2019; }

bool is_closing(std::string_view s) noexcept {
    return s == "\"" || s == "'" || s == ")" || s == "]" || s == "”" || s == "’" || s == "»";
}

bool is_opening(std::string_view s) noexcept {
    return s == "\"" || s == "'" || s == "(" || s == "[" || s == "“" || s == "‘" || s == "«";
}

bool is_terminator(std::string_view s) noexcept { return s == "." || s == "!" || s == "?"; }

bool is_upper(char32_t c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        out.push_back(text.substr(start, end - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::unordered_set<std::string> parse_word_list(std::string_view text) {
    std::unordered_set<std::string> words;
    for (auto line : split_lines(text)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        words.insert(to_lower(line));
    }
    return words;
}

Lemmatizer::ExceptionTable parse_exception_text(std::string_view text) {
    Lemmatizer::ExceptionTable table;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
            throw ParseError("exception table: expected surface<TAB>lemma", line_no);
        const auto surface = trim(line.substr(0, tab));
        const auto lemma = trim(line.substr(tab + 1));
        if (surface.empty() || lemma.empty()) throw ParseError("exception table: empty field", line_no);
        table[to_lower(surface)] = to_lower(lemma);
    }
    return table;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool ends_with(std::string_view s, std::string_view suffix) noexcept {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) noexcept {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_consonant(char c) noexcept { return c >= 'a' && c <= 'z' && !is_vowel(c); }

bool has_vowel(std::string_view s) noexcept {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c); });
}

}  // namespace

Lemma::Lemma(std::string_view id) : id_(to_lower(id)) {
    if (id_.empty()) throw ContractViolation("lemma must be non-empty");
    if (is_space(decode(id_, 0).value) || is_space(static_cast<unsigned char>(id_.back())))
        throw ContractViolation("lemma must not carry surrounding whitespace: '" + id_ + "'");
}

std::ostream& operator<<(std::ostream& os, const Lemma& lemma) { return os << lemma.str(); }

std::string_view to_string(TokenKind kind) noexcept {
    switch (kind) {
        case TokenKind::word: return "word";
        case TokenKind::punctuation: return "punct";
        case TokenKind::number: return "number";
    }
    return "?";
}

std::string_view to_string(ExclusionReason reason) noexcept {
    switch (reason) {
        case ExclusionReason::not_a_word: return "not_a_word";
        case ExclusionReason::stopword: return "stopword";
        case ExclusionReason::too_short: return "too_short";
        case ExclusionReason::proper_noun: return "proper_noun";
    }
    return "?";
}

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto cp = decode(s, i);
        if (cp.length == 1 && cp.value >= 'A' && cp.value <= 'Z') {
            out.push_back(static_cast<char>(cp.value + ('a' - 'A')));
        } else if (cp.length == 2 && cp.value >= 0xC0 && cp.value <= 0xDE && cp.value != 0xD7) {
            const char32_t lower = cp.value + 0x20;
            out.push_back(static_cast<char>(0xC0 | (lower >> 6)));
            out.push_back(static_cast<char>(0x80 | (lower & 0x3F)));
        } else {
            out.append(s.substr(i, cp.length));
        }
        i += cp.length;
    }
    return out;
}

bool starts_uppercase(std::string_view s) noexcept { return !s.empty() && is_upper(decode(s, 0).value); }

std::size_t utf8_length(std::string_view s) noexcept {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); i += decode(s, i).length) ++n;
    return n;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    std::size_t space_start = 0;

    auto emit = [&](std::size_t begin, std::size_t end, TokenKind kind) {
        Token t;
        t.surface = std::string(text.substr(begin, end - begin));
        t.kind = kind;
        t.begin = begin;
        t.end = end;
        t.space_before = std::string(text.substr(space_start, begin - space_start));
        tokens.push_back(std::move(t));
        space_start = end;
    };

    while (i < text.size()) {
        const auto cp = decode(text, i);
        if (is_space(cp.value)) {
            i += cp.length;
            continue;
        }
        const std::size_t begin = i;
        if (is_letter(cp.value) || is_digit(cp.value)) {
            const bool numeric = is_digit(cp.value);
            i += cp.length;
            while (i < text.size()) {
                const auto next = decode(text, i);
                if (is_letter(next.value) || is_digit(next.value)) {
                    i += next.length;
                    continue;
                }
                // Inner connectors must sit between two word characters.
                const bool connector = numeric ? (next.value == '.' || next.value == ',')
                                               : (is_apostrophe(next.value) || next.value == '-');
                if (connector && i + next.length < text.size()) {
                    const auto after = decode(text, i + next.length);
                    const bool joins = numeric ? is_digit(after.value) : is_letter(after.value);
                    if (joins) {
                        i += next.length + after.length;
                        continue;
                    }
                }
                break;
            }
            emit(begin, i, numeric ? TokenKind::number : TokenKind::word);
        } else {
            i += cp.length;
            emit(begin, i, TokenKind::punctuation);
        }
    }

    // Sentence boundaries.
    std::size_t sentence = 0;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        tokens[k].sentence_index = sentence;
        if (!is_terminator(tokens[k].surface)) continue;
        std::size_t j = k + 1;
        while (j < tokens.size() && tokens[j].space_before.empty() &&
               (is_closing(tokens[j].surface) || is_terminator(tokens[j].surface)))
            ++j;
        if (j >= tokens.size() || tokens[j].space_before.empty()) continue;
        std::size_t head = j;
        if (is_opening(tokens[head].surface) && head + 1 < tokens.size() && tokens[head + 1].space_before.empty())
            ++head;
        if (!starts_uppercase(tokens[head].surface)) continue;
        for (std::size_t m = k + 1; m < j; ++m) tokens[m].sentence_index = sentence;
        k = j - 1;
        ++sentence;
    }
    return tokens;
}

std::string detokenize(std::span<const Token> tokens, std::string_view trailing) {
    std::string out;
    for (const auto& t : tokens) {
        out += t.space_before;
        out += t.surface;
    }
    out += trailing;
    return out;
}

std::string_view trailing_space(std::string_view text) {
    std::size_t end = text.size();
    // Walk back over whitespace code points; continuation bytes belong to the
    // code point that starts earlier.
    while (end > 0) {
        std::size_t start = end - 1;
        while (start > 0 && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) --start;
        const auto cp = decode(text, start);
        if (start + cp.length != end || !is_space(cp.value)) break;
        end = start;
    }
    return text.substr(end);
}

// ---------------------------------------------------------------- Lemmatizer

Lemmatizer::Lemmatizer()
    : Lemmatizer(parse_exception_text(bundled::irregular_forms_text()), parse_word_list(bundled::e_stems_text())) {}

Lemmatizer::Lemmatizer(ExceptionTable exceptions, StemSet e_stems)
    : exceptions_(std::move(exceptions)), e_stems_(std::move(e_stems)) {}

Lemmatizer::ExceptionTable Lemmatizer::parse_exceptions(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_exception_text(ss.str());
}

Lemmatizer::ExceptionTable Lemmatizer::load_exceptions(const std::filesystem::path& path) {
    return parse_exception_text(read_file(path));
}

std::string Lemmatizer::restore_stem(std::string stem) const {
    const auto n = stem.size();
    if (n >= 3 && stem[n - 1] == stem[n - 2]) {
        switch (stem[n - 1]) {
            case 'b': case 'd': case 'g': case 'm': case 'n': case 'p': case 'r': case 't':
                stem.pop_back();
                return stem;
            default:
                break;
        }
    }
    if (e_stems_.contains(stem)) return stem + 'e';
    if (n < 2) return stem;
    const char last = stem[n - 1];
    const char prev = stem[n - 2];
    const bool add_e =
        last == 'v' || last == 'u' || last == 'c' ||
        (last == 'z' && (prev == 'i' || prev == 'y')) ||
        (last == 'g' && (prev == 'd' || prev == 'r')) ||
        (last == 't' && prev == 'a' && n >= 4 && is_consonant(stem[n - 3])) ||
        (last == 't' && prev == 'u' && n >= 5 && is_consonant(stem[n - 3])) ||
        (last == 'r' && prev == 'u' && n >= 3 && is_consonant(stem[n - 3])) ||
        (last == 'l' && std::string_view("bcdfgkptz").find(prev) != std::string_view::npos) ||
        (last == 's' && is_consonant(prev) && prev != 's') ||
        (last == 's' && (prev == 'i' || prev == 'y') && n >= 6);
    if (add_e) stem.push_back('e');
    return stem;
}

std::string Lemmatizer::step(const std::string& w) const {
    if (auto it = exceptions_.find(w); it != exceptions_.end()) return it->second;

    for (std::string_view poss : {"'s", "’s"}) {
        if (w.size() > poss.size() && ends_with(w, poss)) return w.substr(0, w.size() - poss.size());
    }
    if (w.size() > 1 && w.back() == '\'') return w.substr(0, w.size() - 1);

    const auto n = w.size();
    if (n >= 5 && ends_with(w, "ies")) return w.substr(0, n - 3) + "y";
    if (n >= 4 && ends_with(w, "es")) {
        const std::string_view stem(w.data(), n - 2);
        if (ends_with(stem, "ss") || ends_with(stem, "x") || ends_with(stem, "zz") || ends_with(stem, "ch") ||
            ends_with(stem, "sh") || (ends_with(stem, "o") && stem.size() >= 3))
            return std::string(stem);
    }
    if (n >= 4 && w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is"))
        return w.substr(0, n - 1);

    auto try_suffix = [&](std::size_t suffix_len) -> std::string {
        const std::string stem = w.substr(0, n - suffix_len);
        if (stem.size() < 2 || !has_vowel(stem)) return {};
        std::string restored = restore_stem(stem);
        if (restored.size() < 3 || !has_vowel(restored)) return {};
        return restored;
    };
    if (n >= 5 && ends_with(w, "ing")) {
        if (auto r = try_suffix(3); !r.empty()) return r;
        return w;
    }
    if (n >= 4 && ends_with(w, "ed") && !ends_with(w, "eed")) {
        if (n >= 5 && ends_with(w, "ied")) return w.substr(0, n - 3) + "y";
        if (auto r = try_suffix(2); !r.empty()) return r;
    }
    return w;
}

Lemma Lemmatizer::lemmatize(std::string_view surface) const {
    std::string current = to_lower(surface);
    if (current.empty()) throw ContractViolation("cannot lemmatize an empty surface");
    for (int i = 0; i < 8; ++i) {
        std::string next = step(current);
        if (next.empty() || next == current) break;
        current = std::move(next);
    }
    return Lemma(current);
}

void Lemmatizer::add_exceptions(const ExceptionTable& extra) {
    for (const auto& [surface, lemma] : extra) exceptions_[surface] = lemma;
}

const Lemmatizer& default_lemmatizer() {
    static const Lemmatizer instance;
    return instance;
}

// ------------------------------------------------------------------ Stoplist

Stoplist Stoplist::parse(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return Stoplist(parse_word_list(ss.str()));
}

Stoplist Stoplist::load(const std::filesystem::path& path) { return Stoplist(parse_word_list(read_file(path))); }

const Stoplist& Stoplist::bundled() {
    static const Stoplist instance(parse_word_list(bundled::stoplist_text()));
    return instance;
}

// ---------------------------------------------------------------- Candidates

CandidateSet extract_candidates(std::span<const Token> tokens, const Lemmatizer& lemmatizer,
                                const Stoplist& stoplist, const CandidateRules& rules) {
    CandidateSet out;

    // Lowercase-initial word surfaces present anywhere in the document.
    std::unordered_set<std::string> lowercase_forms;
    for (const auto& t : tokens) {
        if (t.is_word() && !starts_uppercase(t.surface)) lowercase_forms.insert(t.surface);
    }

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        auto exclude = [&](ExclusionReason r) { out.exclusions.push_back({i, r}); };

        if (!t.is_word()) {
            exclude(ExclusionReason::not_a_word);
            continue;
        }
        const Lemma lemma = lemmatizer.lemmatize(t.surface);
        const std::string lower = to_lower(t.surface);
        if (stoplist.contains(lemma.str()) || stoplist.contains(lower)) {
            exclude(ExclusionReason::stopword);
            continue;
        }
        if (utf8_length(lemma.str()) < rules.min_len) {
            exclude(ExclusionReason::too_short);
            continue;
        }
        if (starts_uppercase(t.surface)) {
            const bool sentence_initial = i == 0 || tokens[i - 1].sentence_index != t.sentence_index ||
                                          (i >= 1 && is_opening(tokens[i - 1].surface) &&
                                           (i == 1 || tokens[i - 2].sentence_index != t.sentence_index));
            const bool known = lowercase_forms.contains(lower) ||
                               (rules.lexicon && (rules.lexicon->contains(lower) ||
                                                  rules.lexicon->contains(lemma.str())));
            if (!sentence_initial || !known) {
                exclude(ExclusionReason::proper_noun);
                continue;
            }
        }
        out.candidates.push_back({i, lemma, t.sentence_index, {}});
    }
    return out;
}

}  // namespace broccoli
