#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "broccoli/annotation.hpp"
#include "broccoli/events.hpp"
#include "broccoli/memory.hpp"
#include "broccoli/selector.hpp"

namespace broccoli {

/// Engine settings read from a `key = value` file with environment overrides.
///
/// Every key `a.b_c` can be overridden by the variable `BROCCOLI_A_B_C`.
/// Profiles beyond the default are declared as `profile.<name>.dictionary` or
/// `profile.<name>.aligned`.
struct Config {
    TutorParams tutor;
    SelectionConfig selection;
    std::size_t min_len = 3;

    std::filesystem::path dictionary;  ///< default profile, lemma lookup
    std::filesystem::path aligned;     ///< default profile, aligned fixture (wins over dictionary)
    std::map<std::string, std::filesystem::path> profile_dictionaries;
    std::map<std::string, std::filesystem::path> profile_aligned;

    std::filesystem::path lm;                 ///< trained n-gram model
    std::optional<double> constant_guess;     ///< used when no model is configured
    std::filesystem::path stoplist;           ///< replaces the bundled list
    std::filesystem::path exceptions;         ///< extra irregular forms
    std::filesystem::path lexicon;            ///< known common words, one per line

    std::filesystem::path state_dir = "broccoli-state";
    std::size_t snapshot_every = 1000;
    bool reveal_is_exposure = false;

    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t threads = 8;
    std::ptrdiff_t max_in_flight = 16;

    /// Applies one setting. Throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    /// Reads `key = value` lines; '#' starts a comment line. Relative paths
    /// are resolved against the file's directory.
    void load_file(const std::filesystem::path& path);
    void parse(std::istream& in, const std::filesystem::path& base_dir = {});

    /// Applies BROCCOLI_* overrides for every known key. `getenv` is
    /// injectable for tests.
    void apply_env(const std::function<const char*(const char*)>& getenv);
    void apply_env();

    /// Cross-field checks; throws ConfigError.
    void validate() const;
};

/// Keys understood by Config::set, excluding per-profile ones.
const std::vector<std::string>& config_keys();

/// "selection.density" -> "BROCCOLI_SELECTION_DENSITY".
std::string env_var_for(std::string_view key);

/// Loads the configured resources and builds the pipeline. Throws
/// ConfigError for unreadable or malformed resource files.
AnnotatorResources load_resources(const Config& config);

}  // namespace broccoli
