#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "broccoli/text.hpp"

namespace broccoli {

/// `prev` values with this prefix are entries from outside the page set.
inline constexpr std::string_view kExternalPrefix = "other-";

/// Page-to-page click counts with per-page stop probabilities.
///
/// Build with the mutators, then call finalize() before walking. After
/// finalize, for every page p: no_click(p) + sum of transition probabilities
/// out of p equals 1.
class ClickstreamGraph {
public:
    struct Edge {
        std::size_t to = 0;
        std::uint64_t count = 0;
    };

    std::size_t add_page(std::string_view id, std::size_t token_length);
    /// Sets the page text; the page's token length becomes the lemma count.
    void set_page_lemmas(std::string_view id, std::vector<Lemma> lemmas);
    void add_transition(std::string_view from, std::string_view to, std::uint64_t count);
    void add_visits(std::string_view page, std::uint64_t count);
    /// Overrides the derived stop probability.
    void set_no_click(std::string_view page, double probability);

    /// Derives visit counts and stop probabilities. A page's visits default to
    /// all clicks into it; its stop probability to the share of visits not
    /// followed by a tracked click, and to 1 when it has no outgoing clicks.
    /// Throws ContractViolation when no page has visits or an explicit stop
    /// probability lies outside [0, 1].
    void finalize();

    /// Clicks TSV `prev<TAB>curr<TAB>count` (a fourth column, as in the
    /// public dumps, puts the count last). Rows into unknown pages are skipped;
    /// rows from unknown or `other-` pages count as external visits.
    /// Lengths TSV `page<TAB>token_count`. Texts TSV `page<TAB>text`.
    static ClickstreamGraph parse(std::istream& clicks, std::istream& lengths, std::istream* texts = nullptr,
                                  const Lemmatizer& lemmatizer = default_lemmatizer());
    static ClickstreamGraph load(const std::filesystem::path& clicks, const std::filesystem::path& lengths,
                                 const std::optional<std::filesystem::path>& texts = std::nullopt,
                                 const Lemmatizer& lemmatizer = default_lemmatizer());

    std::size_t page_count() const noexcept { return ids_.size(); }
    const std::string& page_id(std::size_t page) const { return ids_.at(page); }
    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t token_length(std::size_t page) const { return lengths_.at(page); }
    const std::vector<Lemma>& lemmas(std::size_t page) const { return lemmas_.at(page); }
    bool has_text(std::size_t page) const { return has_text_.at(page); }
    std::uint64_t visits(std::size_t page) const { return visits_.at(page); }
    double no_click(std::size_t page) const { return no_click_.at(page); }
    const std::vector<Edge>& out_edges(std::size_t page) const { return out_.at(page); }
    std::uint64_t out_total(std::size_t page) const { return out_total_.at(page); }
    double transition_probability(std::size_t from, std::size_t to) const;
    std::size_t skipped_rows() const noexcept { return skipped_rows_; }
    bool finalized() const noexcept { return finalized_; }

private:
    std::size_t intern(std::string_view id);

    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> lengths_;
    std::vector<std::vector<Lemma>> lemmas_;
    std::vector<bool> has_text_;
    std::vector<std::vector<Edge>> out_;
    std::vector<std::uint64_t> out_total_;
    std::vector<std::uint64_t> inflow_;
    std::vector<std::uint64_t> explicit_visits_;
    std::vector<std::uint64_t> visits_;
    std::vector<std::optional<double>> explicit_no_click_;
    std::vector<double> no_click_;
    std::uint64_t visit_total_ = 0;
    std::size_t skipped_rows_ = 0;
    bool finalized_ = false;

    friend class Walker;
};

/// Seeded random browsing over a finalized graph.
class Walker {
public:
    Walker(const ClickstreamGraph& graph, std::uint64_t seed);

    /// Start page drawn proportionally to visit counts.
    std::size_t sample_start();
    /// Next page, or nothing when the reader stops on `page`.
    std::optional<std::size_t> step(std::size_t page);
    /// Uniform in [0, 1) from the top 53 bits of the engine output.
    double uniform();

private:
    const ClickstreamGraph& graph_;
    std::mt19937_64 engine_;
};

struct WalkConfig {
    std::size_t session_tokens = 1000;      ///< N
    std::size_t total_tokens = 2'000'000;
    std::uint64_t seed = 0;
    std::size_t restart_stall_limit = 1000;

    void validate() const;
};

struct Session {
    std::vector<std::size_t> pages;  ///< emission order; the start page appears once, first
    std::size_t tokens = 0;
    bool abandoned = false;
};

/// One session from `start`: walk until the reader stops, restart from
/// `start` without emitting it again, and end once the session holds at
/// least `session_tokens` tokens. Gives up after `stall_limit` consecutive
/// walks that emitted no tokens.
Session walk_session(const ClickstreamGraph& graph, Walker& walker, std::size_t start, std::size_t session_tokens,
                     std::size_t stall_limit);

struct SimulationResult {
    std::vector<std::size_t> pages;  ///< concatenation of completed sessions
    std::vector<Lemma> lemmas;       ///< page texts in the same order, when texts are loaded
    std::size_t tokens = 0;
    std::size_t sessions = 0;
    std::size_t stalls = 0;          ///< abandoned sessions, whose pages are dropped
};

/// Completed sessions are appended until `total_tokens` is reached. Throws
/// Error when the graph cannot complete any session of the requested size.
SimulationResult simulate_sessions(const ClickstreamGraph& graph, const WalkConfig& config);

}  // namespace broccoli
