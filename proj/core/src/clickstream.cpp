#include "broccoli/clickstream.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "broccoli/error.hpp"

namespace broccoli {

namespace {

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

std::uint64_t parse_count(std::string_view s, std::size_t line_no, const char* what) {
    std::uint64_t v = 0;
    if (s.empty()) throw ParseError(std::string(what) + ": empty count", line_no);
    for (const char c : s) {
        if (c < '0' || c > '9') throw ParseError(std::string(what) + ": bad count '" + std::string(s) + "'", line_no);
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        fn(split_tabs(line), line_no);
    }
}

}  // namespace

std::size_t ClickstreamGraph::intern(std::string_view id) {
    if (const auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
    const auto n = ids_.size();
    ids_.emplace_back(id);
    index_.emplace(std::string(id), n);
    lengths_.push_back(0);
    lemmas_.emplace_back();
    has_text_.push_back(false);
    out_.emplace_back();
    out_total_.push_back(0);
    inflow_.push_back(0);
    explicit_visits_.push_back(0);
    explicit_no_click_.emplace_back();
    finalized_ = false;
    return n;
}

std::size_t ClickstreamGraph::add_page(std::string_view id, std::size_t token_length) {
    const auto p = intern(id);
    lengths_[p] = token_length;
    return p;
}

void ClickstreamGraph::set_page_lemmas(std::string_view id, std::vector<Lemma> lemmas) {
    const auto p = intern(id);
    lengths_[p] = lemmas.size();
    lemmas_[p] = std::move(lemmas);
    has_text_[p] = true;
}

void ClickstreamGraph::add_transition(std::string_view from, std::string_view to, std::uint64_t count) {
    const auto f = intern(from);
    const auto t = intern(to);
    auto& edges = out_[f];
    const auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.to == t; });
    if (it == edges.end()) {
        edges.push_back({t, count});
    } else {
        it->count += count;
    }
    out_total_[f] += count;
    inflow_[t] += count;
    finalized_ = false;
}

void ClickstreamGraph::add_visits(std::string_view page, std::uint64_t count) {
    explicit_visits_[intern(page)] += count;
    finalized_ = false;
}

void ClickstreamGraph::set_no_click(std::string_view page, double probability) {
    explicit_no_click_[intern(page)] = probability;
    finalized_ = false;
}

std::optional<std::size_t> ClickstreamGraph::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void ClickstreamGraph::finalize() {
    const auto n = ids_.size();
    visits_.assign(n, 0);
    no_click_.assign(n, 1.0);
    visit_total_ = 0;
    for (std::size_t p = 0; p < n; ++p) {
        std::sort(out_[p].begin(), out_[p].end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
        visits_[p] = inflow_[p] + explicit_visits_[p];
        visit_total_ += visits_[p];
        if (const auto& forced = explicit_no_click_[p]) {
            if (!(*forced >= 0 && *forced <= 1))
                throw ContractViolation("no-click probability of '" + ids_[p] + "' must lie in [0, 1]");
            no_click_[p] = out_total_[p] == 0 ? 1.0 : *forced;
        } else if (out_total_[p] == 0) {
            no_click_[p] = 1.0;
        } else if (visits_[p] == 0) {
            no_click_[p] = 0.0;
        } else {
            const auto v = static_cast<double>(visits_[p]);
            no_click_[p] = std::max(0.0, v - static_cast<double>(out_total_[p])) / v;
        }
    }
    if (visit_total_ == 0) throw ContractViolation("clickstream has no page visits to start sessions from");
    finalized_ = true;
}

double ClickstreamGraph::transition_probability(std::size_t from, std::size_t to) const {
    if (out_total_.at(from) == 0) return 0.0;
    for (const auto& e : out_[from]) {
        if (e.to == to)
            return (1.0 - no_click_.at(from)) * static_cast<double>(e.count) / static_cast<double>(out_total_[from]);
    }
    return 0.0;
}

ClickstreamGraph ClickstreamGraph::parse(std::istream& clicks, std::istream& lengths, std::istream* texts,
                                         const Lemmatizer& lemmatizer) {
    ClickstreamGraph g;
    for_each_record(lengths, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        if (f.size() != 2) throw ParseError("lengths: expected page<TAB>token_count", line_no);
        g.add_page(f[0], parse_count(f[1], line_no, "lengths"));
    });
    if (texts) {
        for_each_record(*texts, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
            if (f.size() != 2) throw ParseError("texts: expected page<TAB>text", line_no);
            std::vector<Lemma> lemmas;
            for (const auto& t : tokenize(f[1])) {
                if (t.is_word()) lemmas.push_back(lemmatizer.lemmatize(t.surface));
            }
            g.set_page_lemmas(f[0], std::move(lemmas));
        });
    }
    const auto known = g.ids_.size();
    for_each_record(clicks, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        if (f.size() != 3 && f.size() != 4) throw ParseError("clicks: expected prev<TAB>curr<TAB>count", line_no);
        const auto count = parse_count(f.back(), line_no, "clicks");
        const auto curr = g.find(f[1]);
        if (!curr || *curr >= known) {
            ++g.skipped_rows_;
            return;
        }
        const auto prev = g.find(f[0]);
        if (f[0].starts_with(kExternalPrefix) || !prev || *prev >= known) {
            g.add_visits(f[1], count);
        } else {
            g.add_transition(f[0], f[1], count);
        }
    });
    g.finalize();
    return g;
}

ClickstreamGraph ClickstreamGraph::load(const std::filesystem::path& clicks, const std::filesystem::path& lengths,
                                        const std::optional<std::filesystem::path>& texts,
                                        const Lemmatizer& lemmatizer) {
    std::ifstream c(clicks);
    if (!c) throw ConfigError("cannot open clickstream file " + clicks.string());
    std::ifstream l(lengths);
    if (!l) throw ConfigError("cannot open page-length file " + lengths.string());
    std::ifstream t;
    if (texts) {
        t.open(*texts);
        if (!t) throw ConfigError("cannot open page-text file " + texts->string());
    }
    return parse(c, l, texts ? &t : nullptr, lemmatizer);
}

// -------------------------------------------------------------------- walker

Walker::Walker(const ClickstreamGraph& graph, std::uint64_t seed) : graph_(graph), engine_(seed) {
    if (!graph.finalized()) throw ContractViolation("walker needs a finalized graph");
}

double Walker::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Walker::sample_start() {
    const double target = uniform() * static_cast<double>(graph_.visit_total_);
    std::uint64_t cumulative = 0;
    std::size_t last = 0;
    for (std::size_t p = 0; p < graph_.visits_.size(); ++p) {
        if (graph_.visits_[p] == 0) continue;
        cumulative += graph_.visits_[p];
        last = p;
        if (target < static_cast<double>(cumulative)) return p;
    }
    return last;
}

std::optional<std::size_t> Walker::step(std::size_t page) {
    if (uniform() < graph_.no_click_.at(page)) return std::nullopt;
    const auto& edges = graph_.out_[page];
    const double target = uniform() * static_cast<double>(graph_.out_total_[page]);
    std::uint64_t cumulative = 0;
    for (const auto& e : edges) {
        cumulative += e.count;
        if (target < static_cast<double>(cumulative)) return e.to;
    }
    return edges.back().to;
}

void WalkConfig::validate() const {
    if (session_tokens < 1) throw ContractViolation("session token target N must be at least 1");
    if (total_tokens < session_tokens) throw ContractViolation("total tokens must be at least N");
    if (restart_stall_limit < 1) throw ContractViolation("restart stall limit must be at least 1");
}

Session walk_session(const ClickstreamGraph& graph, Walker& walker, std::size_t start, std::size_t session_tokens,
                     std::size_t stall_limit) {
    // Bounds a walk that keeps clicking through pages without text.
    constexpr std::size_t kIdleStepLimit = 1'000'000;

    Session s;
    s.pages.push_back(start);
    s.tokens = graph.token_length(start);
    std::size_t idle_walks = 0;
    while (s.tokens < session_tokens) {
        const auto before = s.tokens;
        std::size_t page = start;
        std::size_t idle_steps = 0;
        while (s.tokens < session_tokens) {
            const auto next = walker.step(page);
            if (!next) break;
            page = *next;
            s.pages.push_back(page);
            s.tokens += graph.token_length(page);
            idle_steps = graph.token_length(page) ? 0 : idle_steps + 1;
            if (idle_steps >= kIdleStepLimit) {
                s.abandoned = true;
                return s;
            }
        }
        if (s.tokens >= session_tokens) break;
        idle_walks = s.tokens == before ? idle_walks + 1 : 0;
        if (idle_walks >= stall_limit) {
            s.abandoned = true;
            return s;
        }
    }
    return s;
}

SimulationResult simulate_sessions(const ClickstreamGraph& graph, const WalkConfig& config) {
    config.validate();
    if (!graph.finalized()) throw ContractViolation("simulate_sessions needs a finalized graph");
    // Consecutive abandoned sessions after which the graph is deemed unable
    // to produce sessions of the requested size.
    constexpr std::size_t kMaxConsecutiveStalls = 10'000;

    SimulationResult out;
    Walker walker(graph, config.seed);
    std::size_t consecutive_stalls = 0;
    while (out.tokens < config.total_tokens) {
        const auto start = walker.sample_start();
        auto session = walk_session(graph, walker, start, config.session_tokens, config.restart_stall_limit);
        if (session.abandoned) {
            ++out.stalls;
            if (++consecutive_stalls >= kMaxConsecutiveStalls)
                throw Error("clickstream sessions keep stalling before reaching " +
                            std::to_string(config.session_tokens) + " tokens");
            continue;
        }
        consecutive_stalls = 0;
        ++out.sessions;
        out.tokens += session.tokens;
        for (const auto p : session.pages) {
            out.pages.push_back(p);
            const auto& lemmas = graph.lemmas(p);
            out.lemmas.insert(out.lemmas.end(), lemmas.begin(), lemmas.end());
        }
    }
    return out;
}

}  // namespace broccoli
