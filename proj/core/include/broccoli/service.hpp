#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "broccoli/annotation.hpp"
#include "broccoli/config.hpp"
#include "broccoli/events.hpp"

namespace broccoli {

struct HttpResult {
    int status = 200;
    std::string body;
};

/// Per-lemma half-life, last exposure and current recall, as JSON.
std::string learner_state_json(const LearnerState& state, Timestamp now);

/// Request handling behind the HTTP routes, free of any transport so the
/// command line and tests can drive it directly.
///
/// Errors map to statuses: malformed input 400, unknown learner 404,
/// timestamp regression 409, empty text 422, provider failure 503.
class Engine {
public:
    Engine(Annotator annotator, std::filesystem::path state_dir, LearnerStore::Options options);
    explicit Engine(const Config& config);

    HttpResult annotate(std::string_view body);
    HttpResult events(std::string_view body);
    HttpResult learner_state(const std::string& learner_id, std::optional<Timestamp> now = std::nullopt);
    HttpResult health() const;

    /// Snapshots every loaded learner.
    void flush();

    const Annotator& annotator() const noexcept { return annotator_; }
    LearnerStore& store() noexcept { return store_; }

private:
    template <typename Fn>
    HttpResult guarded(Fn&& fn);

    Annotator annotator_;
    LearnerStore store_;
};

/// HTTP/1.1 front end for an Engine.
class HttpServer {
public:
    HttpServer(Engine& engine, std::size_t threads = 8);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the socket; port 0 picks a free port. Returns the bound port.
    /// Throws Error when binding fails.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace broccoli
