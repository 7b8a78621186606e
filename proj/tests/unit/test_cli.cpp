#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <thread>

#include "broccoli/annotation.hpp"
#include "broccoli/events.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace broccoli;
using testing::quote;

namespace {

const std::string kCli = testing::quote(testing::cli_path());

std::string golden(const char* name) { return quote(testing::data_dir() / "golden" / name); }

testing::CommandResult cli(const std::string& args) { return testing::run_command(kCli + " " + args + " 2>/dev/null"); }

testing::CommandResult cli_with_stderr(const std::string& args) {
    return testing::run_command(kCli + " " + args + " 2>&1");
}

// `broccoli serve` running as a child process with stderr captured to a file.
class ServeProcess {
public:
    ServeProcess(const std::vector<std::string>& args, const std::filesystem::path& log) : log_(log) {
        pid_ = ::fork();
        REQUIRE(pid_ >= 0);
        if (pid_ == 0) {
            const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            ::dup2(fd, 2);
            ::close(1);
            std::vector<std::string> all{testing::cli_path().string(), "serve"};
            all.insert(all.end(), args.begin(), args.end());
            std::vector<char*> argv;
            for (auto& a : all) argv.push_back(a.data());
            argv.push_back(nullptr);
            ::execv(argv[0], argv.data());
            ::_exit(127);
        }
    }
    ~ServeProcess() {
        if (pid_ > 0 && !reaped_) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    /// Port printed on the "listening on" line, or 0 if the process exited first.
    int wait_for_port() {
        const std::regex listening("listening on [^:]+:([0-9]+)");
        for (int i = 0; i < 500; ++i) {
            std::smatch m;
            std::ifstream in(log_);
            const std::string log((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            if (std::regex_search(log, m, listening)) return std::stoi(m[1]);
            if (exited()) return 0;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        return 0;
    }

    int terminate_and_wait() {
        ::kill(pid_, SIGTERM);
        return wait();
    }

    int wait() {
        int status = 0;
        ::waitpid(pid_, &status, 0);
        reaped_ = true;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

private:
    bool exited() {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            reaped_ = true;
            return true;
        }
        return false;
    }

    std::filesystem::path log_;
    pid_t pid_ = -1;
    bool reaped_ = false;
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits zero") {
    const auto r = cli("--help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("annotate") != std::string::npos);
    CHECK(cli("annotate --help").exit_code == 0);
}

TEST_CASE("usage and config errors exit 2") {
    CHECK(cli("").exit_code == 2);
    CHECK(cli("frobnicate").exit_code == 2);
    const auto missing = cli_with_stderr("annotate --dict /nonexistent/dict.tsv " + golden("input.txt"));
    CHECK(missing.exit_code == 2);
    CHECK(missing.out.find("/nonexistent/dict.tsv") != std::string::npos);
    CHECK(cli("annotate " + golden("input.txt")).exit_code == 2);
    CHECK(cli("annotate --dict " + golden("dictionary.tsv") + " --density 2 " + golden("input.txt")).exit_code == 2);

    testing::TempDir dir;
    CHECK(cli("train-lm " + golden("lm_corpus.txt") + " --order 0 --out " + quote(dir / "m")).exit_code == 2);
}

TEST_CASE("runtime failures exit 1") {
    testing::TempDir dir;
    testing::write_file(dir / "empty.txt", "");
    CHECK(cli("train-lm " + quote(dir / "empty.txt") + " --out " + quote(dir / "m")).exit_code == 1);
    CHECK(cli("annotate --dict " + golden("dictionary.tsv") + " " + quote(dir / "empty.txt")).exit_code == 1);
}

TEST_CASE("annotate is deterministic and reversible") {
    const std::string args = "annotate --dict " + golden("dictionary.tsv") + " --lm " + golden("model.ngram") +
                             " --density 0.2 --now 1760000000 " + golden("input.txt");
    const auto a = cli(args);
    const auto b = cli(args);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
    const auto doc = document_from_json(a.out);
    CHECK(doc.reconstruct_source() == testing::read_file(testing::data_dir() / "golden" / "input.txt"));
    CHECK_FALSE(doc.spans().empty());

    const auto stdin_run = testing::run_command("cat " + golden("input.txt") + " | " + kCli + " annotate --dict " +
                                                golden("dictionary.tsv") + " --lm " + golden("model.ngram") +
                                                " --density 0.2 --now 1760000000 - 2>/dev/null");
    CHECK(stdin_run.out == a.out);
}

TEST_CASE("density zero leaves the text alone") {
    const auto r = cli("annotate --dict " + golden("dictionary.tsv") + " --density 0 " + golden("input.txt"));
    REQUIRE(r.exit_code == 0);
    CHECK(document_from_json(r.out).spans().empty());
}

TEST_CASE("train-lm output is deterministic and loadable") {
    testing::TempDir dir;
    REQUIRE(cli("train-lm " + golden("lm_corpus.txt") + " --out " + quote(dir / "a.ngram")).exit_code == 0);
    REQUIRE(cli("train-lm " + golden("lm_corpus.txt") + " --out " + quote(dir / "b.ngram")).exit_code == 0);
    CHECK(testing::read_file(dir / "a.ngram") == testing::read_file(dir / "b.ngram"));
    CHECK(testing::read_file(dir / "a.ngram") == testing::read_file(testing::data_dir() / "golden" / "model.ngram"));
    const auto to_stdout = cli("train-lm " + golden("lm_corpus.txt") + " --out -");
    CHECK(to_stdout.out == testing::read_file(dir / "a.ngram"));
    CHECK(NGramModel::load(dir / "a.ngram").order() == 3);
}

TEST_CASE("analyze books") {
    const auto empty = cli("analyze books");
    CHECK(empty.exit_code == 0);
    CHECK(empty.out == "corpus,alpha,N,revisitation_days,vocab_size,tokens,excluded\n");

    const auto book = quote(testing::data_dir() / "books" / "pg10007_carmilla.txt");
    const auto sweep = cli("analyze books --alpha 0.5,0.7,0.9 " + book);
    REQUIRE(sweep.exit_code == 0);
    std::istringstream lines(sweep.out);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].starts_with("pg10007_carmilla,0.5,,"));
    CHECK(rows[3].starts_with("pg10007_carmilla,0.9,,"));

    CHECK(cli("analyze books --alpha 0 " + book).exit_code == 2);
    CHECK(cli("analyze books /nonexistent/book.txt").exit_code == 1);
    const auto skipped = cli("analyze books --min-tokens 100000000 " + book);
    CHECK(skipped.exit_code == 0);
    CHECK(std::count(skipped.out.begin(), skipped.out.end(), '\n') == 1);
}

TEST_CASE("analyze clickstream") {
    testing::TempDir dir;
    testing::write_file(dir / "clicks.tsv", "other-search\tA\t50\nother-search\tB\t50\nA\tB\t40\nB\tA\t40\n");
    testing::write_file(dir / "lengths.tsv", "A\t5\nB\t6\n");
    testing::write_file(dir / "texts.tsv", "A\tThe red fox runs home.\nB\tA brown dog sleeps all day.\n");
    const std::string base = "analyze clickstream --graph " + quote(dir / "clicks.tsv") + " --lengths " +
                             quote(dir / "lengths.tsv");
    CHECK(cli(base).exit_code == 2);
    const std::string full = base + " --texts " + quote(dir / "texts.tsv") +
                             " --session-tokens 20,40 --total-tokens 5000 --alpha 0.9 --seed 3";
    const auto a = cli(full);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == cli(full).out);
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 3);
    CHECK(a.out.find("clicks,0.9,20,") != std::string::npos);
}

TEST_CASE("annotate reads learner state") {
    testing::TempDir dir;
    const double seen_at = 1759999000, now = 1760000000;
    {
        LearnerStore store(dir.path(), {});
        store.ensure("reader");
        const std::vector<ExposureEvent> seen{
            {"reader", "doc-1", EventKind::segment_read, Lemma("city"), 0, Timestamp{seen_at}}};
        store.append(seen);
    }
    const std::string args = "annotate --dict " + golden("dictionary.tsv") +
                             " --constant-guess 0.5 --density 1 --now 1760000000 ";
    const auto priority_of = [](const AnnotatedDocument& d, const std::string& lemma) {
        for (const auto& s : d.meta.selected)
            if (s.lemma.str() == lemma) return s.priority;
        return -1.0;
    };
    const auto fresh = document_from_json(cli(args + golden("input.txt")).out);
    const auto known = document_from_json(
        cli(args + "--learner reader --learner-state " + quote(dir.path()) + " " + golden("input.txt")).out);
    CHECK(known.meta.learner_id == "reader");
    CHECK(priority_of(fresh, "city") == doctest::Approx(0.5 * (4 + 1)).epsilon(1e-12));
    const double r = std::exp2(-(now - seen_at) / 86400 / 0.25);
    const double p = r + 0.5 - 0.5 * r;
    const double gamma = 1 / 0.25 * std::pow(2, -r) + 1;
    CHECK(priority_of(known, "city") == doctest::Approx(p * gamma).epsilon(1e-12));
    CHECK(priority_of(known, "river") == priority_of(fresh, "river"));
}

TEST_CASE("serve answers, then flushes state on SIGTERM") {
    testing::TempDir dir;
    ServeProcess serve({"--dict", (testing::data_dir() / "golden" / "dictionary.tsv").string(), "--state-dir",
                        (dir / "state").string(), "--host", "127.0.0.1", "--port", "0"},
                       dir / "serve.log");
    const int port = serve.wait_for_port();
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    auto res = client.Post("/v1/annotate", R"({"learner_id":"ana","text":"The city by the river."})",
                           "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const std::string event = R"({"events":[{"learner_id":"ana","doc_id":"d","kind":"segment_read",)"
                              R"("lemma":"city","span_id":0,"timestamp":1000}]})";
    CHECK(client.Post("/v1/events", event, "application/json")->status == 200);
    CHECK(serve.terminate_and_wait() == 0);
    const auto snap = read_snapshot(dir / "state" / "ana" / "snapshot");
    REQUIRE(snap);
    CHECK(snap->events_applied == 1);
}

TEST_CASE("serve rejects a bad configuration") {
    testing::TempDir dir;
    ServeProcess serve({"--state-dir", (dir / "state").string(), "--port", "0"}, dir / "serve.log");
    CHECK(serve.wait() == 2);
    CHECK(testing::read_file(dir / "serve.log").find("config error") != std::string::npos);
}

}  // TEST_SUITE
