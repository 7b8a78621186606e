#include <map>
#include <sstream>

#include "broccoli/config.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace broccoli;

TEST_SUITE("config") {

TEST_CASE("key = value parsing") {
    std::istringstream in(R"(# tutor constants
tutor.a = 1.5
tutor.d=2
tutor.initial_half_life = 0.5
selection.density = 0.2
selection.max_lemmas = 7
dictionary.path = dict/fi.tsv
state.dir = /var/lib/broccoli
events.reveal_is_exposure = true
listen.port = 9000
profile.de.dictionary = de.tsv
)");
    Config c;
    c.parse(in, "/etc/broccoli");
    CHECK(c.tutor.a == 1.5);
    CHECK(c.tutor.d == 2);
    CHECK(c.tutor.initial_half_life == 0.5);
    CHECK(c.selection.density == 0.2);
    CHECK(c.selection.max_lemmas == 7u);
    CHECK(c.dictionary == std::filesystem::path("/etc/broccoli/dict/fi.tsv"));
    CHECK(c.state_dir == std::filesystem::path("/var/lib/broccoli"));
    CHECK(c.reveal_is_exposure);
    CHECK(c.port == 9000);
    CHECK(c.profile_dictionaries.at("de") == std::filesystem::path("/etc/broccoli/de.tsv"));
}

TEST_CASE("bad keys and values") {
    Config c;
    CHECK_THROWS_AS(c.set("tutor.e", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("tutor.a", "lots"), ConfigError);
    CHECK_THROWS_AS(c.set("listen.port", "70000"), ConfigError);
    CHECK_THROWS_AS(c.set("events.reveal_is_exposure", "perhaps"), ConfigError);
    std::istringstream no_equals("tutor.a 1\n");
    CHECK_THROWS_AS(c.parse(no_equals), ConfigError);

    Config range;
    range.dictionary = testing::data_dir() / "golden" / "dictionary.tsv";
    range.set("tutor.d", "0.5");
    CHECK_THROWS_AS(range.validate(), ConfigError);
    range.set("tutor.d", "1");
    range.set("selection.density", "1.5");
    CHECK_THROWS_AS(range.validate(), ConfigError);
}

TEST_CASE("environment overrides") {
    CHECK(env_var_for("selection.density") == "BROCCOLI_SELECTION_DENSITY");
    CHECK(env_var_for("tutor.initial_half_life") == "BROCCOLI_TUTOR_INITIAL_HALF_LIFE");

    const std::map<std::string, std::string> env{{"BROCCOLI_SELECTION_DENSITY", "0.3"},
                                                 {"BROCCOLI_TUTOR_C", "4"},
                                                 {"BROCCOLI_LISTEN_HOST", "0.0.0.0"},
                                                 {"UNRELATED", "x"}};
    Config c;
    c.selection.density = 0.1;
    c.apply_env([&](const char* name) -> const char* {
        const auto it = env.find(name);
        return it == env.end() ? nullptr : it->second.c_str();
    });
    CHECK(c.selection.density == 0.3);
    CHECK(c.tutor.c == 4);
    CHECK(c.host == "0.0.0.0");

    Config bad;
    bad.dictionary = testing::data_dir() / "golden" / "dictionary.tsv";
    bad.apply_env([](const char* name) -> const char* {
        return std::string(name) == "BROCCOLI_TUTOR_B" ? "-1" : nullptr;
    });
    CHECK(bad.tutor.b == -1);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(bad.apply_env([](const char* name) -> const char* {
        return std::string(name) == "BROCCOLI_TUTOR_B" ? "steep" : nullptr;
    }),
                    ConfigError);
}

TEST_CASE("every key has an environment variable") {
    for (const auto& key : config_keys()) {
        const auto var = env_var_for(key);
        CHECK(var.starts_with("BROCCOLI_"));
        CHECK(var.find('.') == std::string::npos);
    }
    CHECK(config_keys().size() >= 15);
}

TEST_CASE("a translation source is required") {
    Config c;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dictionary = testing::data_dir() / "golden" / "dictionary.tsv";
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("loading resources") {
    testing::TempDir dir;
    testing::write_file(dir / "broccoli.conf", "dictionary.path = " +
                                                   (testing::data_dir() / "golden" / "dictionary.tsv").string() +
                                                   "\nlm.path = " +
                                                   (testing::data_dir() / "golden" / "model.ngram").string() +
                                                   "\nprofile.aligned.aligned = " +
                                                   (testing::data_dir() / "aligned_fixture.tsv").string() +
                                                   "\nselection.density = 0.25\n");
    Config c;
    c.load_file(dir / "broccoli.conf");
    c.validate();
    const auto r = load_resources(c);
    CHECK(r.providers.size() == 2);
    CHECK(r.providers.contains(kDefaultProfile));
    CHECK(r.providers.contains("aligned"));
    CHECK(r.selection.density == 0.25);
    CHECK(dynamic_cast<const NGramScorer*>(r.scorer.get()));

    Config no_lm;
    no_lm.dictionary = c.dictionary;
    CHECK(dynamic_cast<const ConstantScorer*>(load_resources(no_lm).scorer.get()));

    Config missing;
    missing.dictionary = dir / "nope.tsv";
    try {
        load_resources(missing);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("nope.tsv") != std::string::npos);
    }

    Config malformed;
    testing::write_file(dir / "bad.tsv", "a\tb\tc\n");
    malformed.dictionary = dir / "bad.tsv";
    CHECK_THROWS_AS(load_resources(malformed), ConfigError);

    Config missing_file;
    CHECK_THROWS_AS(missing_file.load_file(dir / "absent.conf"), ConfigError);
}

}  // TEST_SUITE
