// Command-line entry point: annotate, train-lm, analyze and serve.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "broccoli/annotation.hpp"
#include "broccoli/clickstream.hpp"
#include "broccoli/compat.hpp"
#include "broccoli/config.hpp"
#include "broccoli/events.hpp"
#include "broccoli/guessability.hpp"
#include "broccoli/service.hpp"

namespace fs = std::filesystem;
using namespace broccoli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read_all(in);
}

// Settings every engine-backed subcommand accepts on top of the config file.
struct EngineFlags {
    std::string config;
    std::string dictionary;
    std::string aligned;
    std::string lm;
    std::string state_dir;
    std::optional<double> density;
    std::optional<double> constant_guess;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config, "key = value configuration file");
        cmd.add_option("--dict", dictionary, "dictionary TSV: source_lemma<TAB>target_surface");
        cmd.add_option("--aligned", aligned, "aligned-sentence fixture TSV (used instead of --dict)");
        cmd.add_option("--lm", lm, "n-gram model file written by train-lm");
        cmd.add_option("--constant-guess", constant_guess, "guessability for every word when no model is given");
        cmd.add_option("--density", density, "target share of word tokens to translate, in [0, 1]");
    }

    Config build() const {
        Config cfg;
        if (!config.empty()) cfg.load_file(config);
        cfg.apply_env();
        if (!dictionary.empty()) cfg.dictionary = dictionary;
        if (!aligned.empty()) cfg.aligned = aligned;
        if (!lm.empty()) cfg.lm = lm;
        if (!state_dir.empty()) cfg.state_dir = state_dir;
        if (density) cfg.selection.density = *density;
        if (constant_guess) cfg.constant_guess = constant_guess;
        cfg.validate();
        return cfg;
    }
};

// ------------------------------------------------------------------ annotate

struct AnnotateArgs {
    EngineFlags engine;
    std::string input;
    std::string learner = "default";
    std::string profile;
    std::optional<double> now;
};

int run_annotate(const AnnotateArgs& args) {
    const Config cfg = args.engine.build();
    const Annotator annotator(load_resources(cfg));

    AnnotateRequest request;
    request.learner_id = args.learner;
    request.target_profile = args.profile;
    request.density = cfg.selection.density;
    if (args.now) request.now = Timestamp{*args.now};
    request.text = args.input.empty() || args.input == "-" ? read_all(std::cin) : read_text_file(args.input);

    if (!valid_learner_id(request.learner_id)) throw ConfigError("invalid learner id '" + request.learner_id + "'");
    LearnerState state(request.learner_id, cfg.tutor);
    if (!args.engine.state_dir.empty()) {
        const fs::path dir = fs::path(args.engine.state_dir) / request.learner_id;
        if (fs::is_directory(dir)) {
            RecoveryReport report;
            state = recover_learner(dir, request.learner_id, cfg.tutor, EventPolicy{cfg.reveal_is_exposure}, &report)
                        .state;
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
        }
    }
    std::cout << to_json(annotator.annotate(state, request));
    return kExitOk;
}

// ------------------------------------------------------------------ train-lm

struct TrainArgs {
    std::vector<std::string> corpus;
    std::size_t order = 3;
    double k = 1.0;
    std::string out;
};

int run_train(const TrainArgs& args) {
    if (args.order == 0) throw ConfigError("--order must be at least 1");
    if (!(args.k >= 0)) throw ConfigError("--k must be non-negative");
    std::vector<std::string> texts;
    for (const auto& path : args.corpus) texts.push_back(read_text_file(path));
    const auto model = NGramModel::train_texts(texts, args.order, args.k);
    if (args.out.empty() || args.out == "-") {
        model.save(std::cout);
    } else {
        model.save(fs::path(args.out));
    }
    std::cerr << "trained order-" << model.order() << " model, vocabulary " << model.vocab_size() << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::vector<double> alphas{0.9};
    double speed = 200.0;
    double hours = 3.0;
    double percentile = 90.0;
    std::size_t min_tokens = 0;
    std::vector<std::string> books;

    std::string graph;
    std::string lengths;
    std::string texts;
    std::vector<std::size_t> session_tokens{1000};
    std::size_t total_tokens = 2'000'000;
    std::uint64_t seed = 0;
    std::size_t stall_limit = 1000;
};

const char* kCsvHeader = "corpus,alpha,N,revisitation_days,vocab_size,tokens,excluded\n";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void print_row(const std::string& corpus, double alpha, const std::string& n, const RevisitationResult& r) {
    char days[40] = "";
    if (r.days) std::snprintf(days, sizeof days, "%.9g", *r.days);
    std::printf("%s,%.6g,%s,%s,%zu,%zu,%zu\n", csv_field(corpus).c_str(), alpha, n.c_str(), days, r.vocab_size,
                r.tokens, r.excluded);
}

CoverageConfig coverage_for(const AnalyzeArgs& args, double alpha) {
    CoverageConfig c{alpha, args.speed, args.hours, args.percentile};
    try {
        c.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return c;
}

int run_books(const AnalyzeArgs& args) {
    for (const double a : args.alphas) coverage_for(args, a);
    std::fputs(kCsvHeader, stdout);
    int status = kExitOk;
    for (const auto& path : args.books) {
        std::string text;
        try {
            text = read_text_file(path);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            status = kExitRuntime;
            continue;
        }
        const auto lemmas = lemma_stream(strip_gutenberg_boilerplate(text));
        if (lemmas.size() < args.min_tokens) {
            std::cerr << "skipping " << path << ": " << lemmas.size() << " tokens\n";
            continue;
        }
        const CorpusIndex index(lemmas);
        for (const double a : args.alphas) print_row(fs::path(path).stem().string(), a, "", index.revisitation(coverage_for(args, a)));
    }
    return status;
}

int run_clickstream(const AnalyzeArgs& args) {
    for (const double a : args.alphas) coverage_for(args, a);
    if (args.texts.empty()) throw ConfigError("lemma statistics need page texts: pass --texts page<TAB>text TSV");
    const auto graph = ClickstreamGraph::load(args.graph, args.lengths, fs::path(args.texts));
    if (graph.skipped_rows()) std::cerr << "skipped " << graph.skipped_rows() << " clicks into unknown pages\n";
    std::fputs(kCsvHeader, stdout);
    for (const auto n : args.session_tokens) {
        WalkConfig walk{n, args.total_tokens, args.seed, args.stall_limit};
        try {
            walk.validate();
        } catch (const ContractViolation& e) {
            throw ConfigError(e.what());
        }
        const auto sim = simulate_sessions(graph, walk);
        if (sim.stalls) std::cerr << "N=" << n << ": " << sim.stalls << " stalled sessions abandoned\n";
        const CorpusIndex index(sim.lemmas);
        for (const double a : args.alphas)
            print_row(fs::path(args.graph).stem().string(), a, std::to_string(n), index.revisitation(coverage_for(args, a)));
    }
    return kExitOk;
}

// --------------------------------------------------------------------- serve

struct ServeArgs {
    EngineFlags engine;
    std::string host;
    std::optional<int> port;
};

int run_serve(const ServeArgs& args) {
    Config cfg = args.engine.build();
    if (!args.host.empty()) cfg.host = args.host;
    if (args.port) cfg.port = *args.port;
    Engine engine(cfg);

    // Signals go to a dedicated thread; every other thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGINT);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    HttpServer server(engine, cfg.threads);
    int port = 0;
    try {
        port = server.bind(cfg.host, cfg.port);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    std::cerr << "listening on " << cfg.host << ':' << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        std::cerr << "received signal " << sig << ", shutting down" << std::endl;
        server.stop();
    });
    server.run();
    engine.flush();
    // run() can also return on its own; release the waiter in that case.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cerr << "state flushed" << std::endl;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"broccoli: foreign-language vocabulary woven into everyday reading"};
    app.require_subcommand(1);

    AnnotateArgs annotate;
    auto* annotate_cmd = app.add_subcommand("annotate", "Annotate a text and print the document as JSON");
    annotate.engine.attach(*annotate_cmd);
    annotate_cmd->add_option("input", annotate.input, "text file, or '-' / nothing for stdin");
    annotate_cmd->add_option("--learner-state", annotate.engine.state_dir, "state directory of the service");
    annotate_cmd->add_option("--learner", annotate.learner, "learner id")->capture_default_str();
    annotate_cmd->add_option("--profile", annotate.profile, "target profile (default provider when omitted)");
    annotate_cmd->add_option("--now", annotate.now, "evaluation time, seconds since the epoch");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train-lm", "Train an n-gram guessability model");
    train_cmd->add_option("corpus", train.corpus, "plain-text corpus files")->required();
    train_cmd->add_option("--order", train.order, "n-gram order")->capture_default_str();
    train_cmd->add_option("--k", train.k, "add-k smoothing constant")->capture_default_str();
    train_cmd->add_option("--out", train.out, "output model file ('-' for stdout)")->required();

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Lemma revisitation statistics");
    analyze_cmd->require_subcommand(1);
    auto add_coverage = [&](CLI::App* cmd) {
        cmd->add_option("--alpha", analyze.alphas, "corpus coverage values, comma-separated or repeated")
            ->delimiter(',')
            ->allow_extra_args(false)
            ->capture_default_str();
        cmd->add_option("--speed", analyze.speed, "reading speed, words per minute")->capture_default_str();
        cmd->add_option("--hours", analyze.hours, "reading hours per day")->capture_default_str();
        cmd->add_option("--percentile", analyze.percentile, "percentile of gaps")->capture_default_str();
    };
    auto* books_cmd = analyze_cmd->add_subcommand("books", "Analyze plain-text books");
    add_coverage(books_cmd);
    books_cmd->add_option("--min-tokens", analyze.min_tokens, "skip books with fewer word tokens")
        ->capture_default_str();
    books_cmd->add_option("files", analyze.books, "book files");
    auto* click_cmd = analyze_cmd->add_subcommand("clickstream", "Analyze simulated browsing sessions");
    add_coverage(click_cmd);
    click_cmd->add_option("--graph", analyze.graph, "clicks TSV: prev<TAB>curr<TAB>count")->required();
    click_cmd->add_option("--lengths", analyze.lengths, "page lengths TSV: page<TAB>tokens")->required();
    click_cmd->add_option("--texts", analyze.texts, "page texts TSV: page<TAB>text");
    click_cmd->add_option("--session-tokens", analyze.session_tokens, "session sizes N, comma-separated or repeated")
        ->delimiter(',')
        ->allow_extra_args(false)
        ->capture_default_str();
    click_cmd->add_option("--total-tokens", analyze.total_tokens, "tokens to simulate")->capture_default_str();
    click_cmd->add_option("--seed", analyze.seed, "random seed")->capture_default_str();
    click_cmd->add_option("--stall-limit", analyze.stall_limit, "zero-progress restarts before a session is dropped")
        ->capture_default_str();

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP annotation service");
    serve.engine.attach(*serve_cmd);
    serve_cmd->add_option("--state-dir", serve.engine.state_dir, "learner state directory");
    serve_cmd->add_option("--host", serve.host, "listen address");
    serve_cmd->add_option("--port", serve.port, "listen port (0 picks a free one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*annotate_cmd) return run_annotate(annotate);
        if (*train_cmd) return run_train(train);
        if (*books_cmd) return run_books(analyze);
        if (*click_cmd) return run_clickstream(analyze);
        if (*serve_cmd) return run_serve(serve);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
