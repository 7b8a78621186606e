#include "broccoli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace broccoli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

double to_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(value, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(v))
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return v;
}

long long to_integer(const std::string& key, const std::string& value, long long min) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size() || v < min)
        throw ConfigError(key + ": expected an integer >= " + std::to_string(min) + ", got '" + value + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

std::unordered_set<std::string> load_lexicon(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open lexicon " + path.string());
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto w = trim(line);
        if (!w.empty() && w.front() != '#') out.insert(to_lower(w));
    }
    return out;
}

std::shared_ptr<const TranslationProvider> make_provider(const fs::path& dictionary, const fs::path& aligned,
                                                         std::ptrdiff_t max_in_flight) {
    std::shared_ptr<const TranslationProvider> inner;
    if (!aligned.empty()) {
        inner = std::make_shared<AlignedFixtureProvider>(AlignedFixtureProvider::load(aligned));
    } else {
        inner = std::make_shared<DictionaryProvider>(DictionaryProvider::load(dictionary));
    }
    return std::make_shared<BoundedProvider>(std::move(inner), max_in_flight);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "tutor.a",          "tutor.b",           "tutor.c",          "tutor.d",
        "tutor.initial_half_life",               "selection.density", "selection.max_lemmas",
        "selection.min_len", "dictionary.path",  "aligned.path",     "lm.path",
        "guess.constant",   "stoplist.path",     "exceptions.path",  "lexicon.path",
        "state.dir",        "state.snapshot_every",                  "events.reveal_is_exposure",
        "listen.host",      "listen.port",       "server.threads",   "provider.max_in_flight",
    };
    return keys;
}

std::string env_var_for(std::string_view key) {
    std::string out = "BROCCOLI_";
    for (const char c : key) {
        if (c == '.') {
            out += '_';
        } else if (c >= 'a' && c <= 'z') {
            out += static_cast<char>(c - 'a' + 'A');
        } else {
            out += c;
        }
    }
    return out;
}

void Config::set(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "tutor.a") {
        tutor.a = to_double(key, value);
    } else if (key == "tutor.b") {
        tutor.b = to_double(key, value);
    } else if (key == "tutor.c") {
        tutor.c = to_double(key, value);
    } else if (key == "tutor.d") {
        tutor.d = to_double(key, value);
    } else if (key == "tutor.initial_half_life") {
        tutor.initial_half_life = to_double(key, value);
    } else if (key == "selection.density") {
        selection.density = to_double(key, value);
    } else if (key == "selection.max_lemmas") {
        if (value.empty()) {
            selection.max_lemmas.reset();
        } else {
            selection.max_lemmas = static_cast<std::size_t>(to_integer(key, value, 0));
        }
    } else if (key == "selection.min_len") {
        min_len = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "dictionary.path") {
        dictionary = value;
    } else if (key == "aligned.path") {
        aligned = value;
    } else if (key == "lm.path") {
        lm = value;
    } else if (key == "guess.constant") {
        if (value.empty()) {
            constant_guess.reset();
        } else {
            constant_guess = to_double(key, value);
        }
    } else if (key == "stoplist.path") {
        stoplist = value;
    } else if (key == "exceptions.path") {
        exceptions = value;
    } else if (key == "lexicon.path") {
        lexicon = value;
    } else if (key == "state.dir") {
        state_dir = value;
    } else if (key == "state.snapshot_every") {
        snapshot_every = static_cast<std::size_t>(to_integer(key, value, 0));
    } else if (key == "events.reveal_is_exposure") {
        reveal_is_exposure = to_bool(key, value);
    } else if (key == "listen.host") {
        host = value;
    } else if (key == "listen.port") {
        port = static_cast<int>(to_integer(key, value, 0));
        if (port > 65535) throw ConfigError("listen.port: out of range");
    } else if (key == "server.threads") {
        threads = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "provider.max_in_flight") {
        max_in_flight = static_cast<std::ptrdiff_t>(to_integer(key, value, 1));
    } else if (key.starts_with("profile.")) {
        const auto dot = key.rfind('.');
        const auto name = key.substr(8, dot > 8 ? dot - 8 : 0);
        const auto kind = key.substr(dot + 1);
        if (name.empty() || dot <= 8) throw ConfigError("malformed profile key '" + key + "'");
        if (kind == "dictionary") {
            profile_dictionaries[name] = value;
        } else if (kind == "aligned") {
            profile_aligned[name] = value;
        } else {
            throw ConfigError("unknown profile setting '" + key + "'");
        }
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

void Config::parse(std::istream& in, const fs::path& base_dir) {
    static const std::vector<std::string> path_keys{"dictionary.path", "aligned.path", "lm.path",  "stoplist.path",
                                                    "exceptions.path", "lexicon.path", "state.dir"};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        const bool is_path = std::find(path_keys.begin(), path_keys.end(), key) != path_keys.end() ||
                             (key.starts_with("profile.") && (key.ends_with(".dictionary") || key.ends_with(".aligned")));
        if (is_path) value = resolve(base_dir, value).string();
        try {
            set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void Config::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    parse(in, path.parent_path());
}

void Config::apply_env(const std::function<const char*(const char*)>& getenv) {
    for (const auto& key : config_keys()) {
        const std::string var = env_var_for(key);
        if (const char* v = getenv(var.c_str())) {
            try {
                set(key, v);
            } catch (const ConfigError& e) {
                throw ConfigError(var + ": " + e.what());
            }
        }
    }
}

void Config::apply_env() {
    apply_env([](const char* name) { return static_cast<const char*>(std::getenv(name)); });
}

void Config::validate() const {
    try {
        tutor.validate();
        selection.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    if (dictionary.empty() && aligned.empty())
        throw ConfigError("no translation source configured (dictionary.path or aligned.path)");
    if (constant_guess && !(*constant_guess > 0 && *constant_guess <= 1))
        throw ConfigError("guess.constant must lie in (0, 1]");
}

AnnotatorResources load_resources(const Config& config) {
    config.validate();
    AnnotatorResources r;
    try {
        if (!config.exceptions.empty()) {
            auto lemmatizer = std::make_shared<Lemmatizer>();
            lemmatizer->add_exceptions(Lemmatizer::load_exceptions(config.exceptions));
            r.lemmatizer = std::move(lemmatizer);
        }
        if (!config.stoplist.empty()) r.stoplist = Stoplist::load(config.stoplist);
        if (!config.lexicon.empty()) r.lexicon = load_lexicon(config.lexicon);
        if (!config.lm.empty()) {
            auto model = std::make_shared<const NGramModel>(NGramModel::load(config.lm));
            r.scorer = std::make_shared<NGramScorer>(std::move(model), *r.lemmatizer);
        } else {
            r.scorer = std::make_shared<ConstantScorer>(config.constant_guess.value_or(0.5));
        }
        r.providers.emplace(std::string(kDefaultProfile),
                            make_provider(config.dictionary, config.aligned, config.max_in_flight));
        std::set<std::string> names;
        for (const auto& [name, _] : config.profile_dictionaries) names.insert(name);
        for (const auto& [name, _] : config.profile_aligned) names.insert(name);
        for (const auto& name : names) {
            const auto d = config.profile_dictionaries.find(name);
            const auto a = config.profile_aligned.find(name);
            r.providers[name] = make_provider(d == config.profile_dictionaries.end() ? fs::path{} : d->second,
                                              a == config.profile_aligned.end() ? fs::path{} : a->second,
                                              config.max_in_flight);
        }
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    r.min_len = config.min_len;
    r.selection = config.selection;
    return r;
}

}  // namespace broccoli
