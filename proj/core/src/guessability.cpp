#include "broccoli/guessability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "broccoli/error.hpp"

namespace broccoli {

namespace {

constexpr std::string_view kModelMagic = "# broccoli-ngram 1";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Groups token keys by sentence, preserving token order.
template <typename KeyFn>
void for_each_sentence(std::span<const Token> tokens, KeyFn&& key,
                       const std::function<void(std::span<const std::size_t>, const std::vector<std::string>&)>& fn) {
    std::vector<std::size_t> indices;
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!indices.empty() && tokens[i].sentence_index != tokens[indices.back()].sentence_index) {
            fn(indices, keys);
            indices.clear();
            keys.clear();
        }
        indices.push_back(i);
        keys.push_back(key(tokens[i]));
    }
    if (!indices.empty()) fn(indices, keys);
}

}  // namespace

ConstantScorer::ConstantScorer(double value) : value_(value) {
    if (!(value > 0 && value <= 1)) throw ContractViolation("constant guessability must lie in (0, 1]");
}

std::vector<GuessabilityScore> ConstantScorer::score(std::span<const Token> tokens) const {
    std::vector<GuessabilityScore> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].is_word()) out.push_back({i, value_});
    }
    return out;
}

std::string lm_key(const Token& token, const Lemmatizer& lemmatizer) {
    if (token.is_word()) return lemmatizer.lemmatize(token.surface).str();
    return to_lower(token.surface);
}

NGramModel NGramModel::train(std::span<const std::vector<Token>> corpus, std::size_t order, double smoothing_k,
                             const Lemmatizer& lemmatizer) {
    if (order == 0) throw ContractViolation("n-gram order must be at least 1");
    if (!(smoothing_k >= 0) || !std::isfinite(smoothing_k)) throw ContractViolation("smoothing k must be >= 0");

    NGramModel model(order, smoothing_k);
    bool any = false;
    for (const auto& doc : corpus) {
        for_each_sentence(doc, [&](const Token& t) { return lm_key(t, lemmatizer); },
                          [&](std::span<const std::size_t>, const std::vector<std::string>& keys) {
                              std::vector<std::string> padded(order - 1, std::string(kSentenceStart));
                              padded.insert(padded.end(), keys.begin(), keys.end());
                              for (std::size_t pos = order - 1; pos < padded.size(); ++pos) {
                                  const std::string& word = padded[pos];
                                  model.vocab_.insert(word);
                                  for (std::size_t len = 0; len < order; ++len) {
                                      Context ctx(padded.begin() + static_cast<std::ptrdiff_t>(pos - len),
                                                  padded.begin() + static_cast<std::ptrdiff_t>(pos));
                                      auto& entry = model.contexts_[std::move(ctx)];
                                      ++entry.total;
                                      ++entry.next[word];
                                  }
                                  any = true;
                              }
                          });
    }
    if (!any) throw Error("cannot train a language model on an empty corpus");
    model.vocab_.insert(std::string(kUnknownWord));
    return model;
}

NGramModel NGramModel::train_texts(std::span<const std::string> texts, std::size_t order, double smoothing_k,
                                   const Lemmatizer& lemmatizer) {
    std::vector<std::vector<Token>> corpus;
    corpus.reserve(texts.size());
    for (const auto& t : texts) corpus.push_back(tokenize(t));
    return train(corpus, order, smoothing_k, lemmatizer);
}

std::string NGramModel::normalize(std::string_view key) const {
    if (key == kSentenceStart) return std::string(key);
    std::string k(key);
    return vocab_.contains(k) ? k : std::string(kUnknownWord);
}

std::uint64_t NGramModel::count(const Context& context, std::string_view key) const {
    const auto it = contexts_.find(context);
    if (it == contexts_.end()) return 0;
    const auto w = it->second.next.find(std::string(key));
    return w == it->second.next.end() ? 0 : w->second;
}

std::uint64_t NGramModel::context_count(const Context& context) const {
    const auto it = contexts_.find(context);
    return it == contexts_.end() ? 0 : it->second.total;
}

double NGramModel::probability(const Context& context, std::string_view key) const {
    const std::string w = normalize(key);
    const double v = static_cast<double>(vocab_.size());
    const double num = static_cast<double>(count(context, w)) + k_;
    const double den = static_cast<double>(context_count(context)) + k_ * v;
    if (den <= 0) return 1.0 / v;
    return num / den;
}

double NGramModel::guess(const Context& left_context, std::string_view key) const {
    Context ctx;
    const std::size_t want = order_ - 1;
    // Right-align to order-1 words, padding with sentence-start markers.
    const std::size_t have = std::min(want, left_context.size());
    ctx.assign(want - have, std::string(kSentenceStart));
    for (std::size_t i = left_context.size() - have; i < left_context.size(); ++i)
        ctx.push_back(normalize(left_context[i]));

    for (std::size_t len = want + 1; len-- > 0;) {
        Context shorter(ctx.end() - static_cast<std::ptrdiff_t>(len), ctx.end());
        if (context_count(shorter) > 0) return probability(shorter, key);
    }
    return probability({}, key);
}

std::vector<GuessabilityScore> NGramModel::score_tokens(std::span<const Token> tokens,
                                                        const Lemmatizer& lemmatizer) const {
    std::vector<GuessabilityScore> out;
    for_each_sentence(tokens, [&](const Token& t) { return lm_key(t, lemmatizer); },
                      [&](std::span<const std::size_t> indices, const std::vector<std::string>& keys) {
                          Context left;
                          for (std::size_t j = 0; j < indices.size(); ++j) {
                              if (tokens[indices[j]].is_word()) out.push_back({indices[j], guess(left, keys[j])});
                              left.push_back(keys[j]);
                          }
                      });
    return out;
}

void NGramModel::save(std::ostream& out) const {
    out << kModelMagic << '\n';
    out << "order\t" << order_ << '\n';
    out << "k\t" << format_double(k_) << '\n';
    out << "vocab\t" << vocab_.size() << '\n';
    for (const auto& [ctx, entry] : contexts_) {
        std::string joined;
        for (std::size_t i = 0; i < ctx.size(); ++i) {
            if (i) joined += ' ';
            joined += ctx[i];
        }
        for (const auto& [word, n] : entry.next) out << joined << '\t' << word << '\t' << n << '\n';
    }
}

void NGramModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model file " + path.string());
    save(out);
    if (!out) throw Error("failed writing model file " + path.string());
}

NGramModel NGramModel::load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next_line() || line != kModelMagic) throw ParseError("not a broccoli n-gram model file", line_no);

    auto header = [&](std::string_view name) -> std::string {
        if (!next_line()) throw ParseError("truncated model header", line_no);
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0] != name) throw ParseError("expected header field '" + std::string(name) + "'", line_no);
        return fields[1];
    };
    std::size_t order = 0;
    double k = 0;
    std::size_t vocab = 0;
    try {
        order = std::stoul(header("order"));
        k = std::stod(header("k"));
        vocab = std::stoul(header("vocab"));
    } catch (const std::logic_error&) {
        throw ParseError("malformed model header", line_no);
    }
    if (order == 0) throw ParseError("model order must be at least 1", line_no);

    NGramModel model(order, k);
    while (next_line()) {
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3) throw ParseError("expected context<TAB>lemma<TAB>count", line_no);
        Context ctx;
        if (!fields[0].empty()) ctx = split(fields[0], ' ');
        if (ctx.size() >= order) throw ParseError("context longer than model order", line_no);
        std::uint64_t n = 0;
        try {
            n = std::stoull(fields[2]);
        } catch (const std::logic_error&) {
            throw ParseError("malformed count", line_no);
        }
        auto& entry = model.contexts_[ctx];
        entry.next[fields[1]] += n;
        entry.total += n;
        if (ctx.empty()) model.vocab_.insert(fields[1]);
    }
    model.vocab_.insert(std::string(kUnknownWord));
    if (model.vocab_.size() != vocab)
        throw ParseError("vocabulary size mismatch: header says " + std::to_string(vocab) + ", counts give " +
                         std::to_string(model.vocab_.size()));
    return model;
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file " + path.string());
    return load(in);
}

NGramScorer::NGramScorer(std::shared_ptr<const NGramModel> model, const Lemmatizer& lemmatizer, double floor)
    : model_(std::move(model)), lemmatizer_(lemmatizer), floor_(floor) {
    if (!model_) throw ContractViolation("NGramScorer needs a model");
}

std::vector<GuessabilityScore> NGramScorer::score(std::span<const Token> tokens) const {
    auto scores = model_->score_tokens(tokens, lemmatizer_);
    for (auto& s : scores) s.value = std::clamp(s.value, floor_, 1.0);
    return scores;
}

}  // namespace broccoli
