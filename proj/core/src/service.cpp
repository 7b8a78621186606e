#include "broccoli/service.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "httplib.h"
#include "json.hpp"

namespace broccoli {

using nlohmann::json;

namespace {

HttpResult error_result(int status, const std::string& message) {
    return {status, json{{"error", message}, {"status", status}}.dump() + "\n"};
}

}  // namespace

std::string learner_state_json(const LearnerState& state, Timestamp now) {
    json lemmas = json::array();
    for (const auto& [lemma, m] : state.memories()) {
        // Clocks may disagree; an exposure stamped after `now` counts as fresh.
        const double recall = now < m.last_exposure ? 1.0 : recall_probability(m, now);
        lemmas.push_back({{"lemma", lemma.str()},
                          {"half_life", m.half_life},
                          {"last_exposure", m.last_exposure.seconds},
                          {"exposure_count", m.exposure_count},
                          {"recall", recall}});
    }
    const json out{{"learner_id", state.learner_id()}, {"now", now.seconds}, {"lemmas", lemmas}};
    return out.dump(2) + "\n";
}

Engine::Engine(Annotator annotator, std::filesystem::path state_dir, LearnerStore::Options options)
    : annotator_(std::move(annotator)), store_(std::move(state_dir), options) {}

Engine::Engine(const Config& config)
    : Engine(Annotator(load_resources(config)), config.state_dir,
             LearnerStore::Options{config.tutor, EventPolicy{config.reveal_is_exposure}, config.snapshot_every}) {}

template <typename Fn>
HttpResult Engine::guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        return error_result(400, e.what());
    } catch (const ContractViolation& e) {
        return error_result(400, e.what());
    } catch (const UnknownLearner& e) {
        return error_result(404, e.what());
    } catch (const TimestampRegression& e) {
        return error_result(409, e.what());
    } catch (const EmptyDocument& e) {
        return error_result(422, e.what());
    } catch (const ProviderUnavailable& e) {
        return error_result(503, e.what());
    } catch (const std::exception& e) {
        return error_result(500, e.what());
    }
}

HttpResult Engine::annotate(std::string_view body) {
    return guarded([&] {
        const auto request = parse_annotate_request(body);
        store_.ensure(request.learner_id);
        const auto state = store_.state(request.learner_id);
        return HttpResult{200, to_json(annotator_.annotate(state, request))};
    });
}

HttpResult Engine::events(std::string_view body) {
    return guarded([&] {
        const auto batch = parse_event_batch(body);
        const auto accepted = store_.append(batch);
        for (const auto& w : store_.take_warnings()) std::cerr << "warning: " << w << '\n';
        return HttpResult{200, json{{"accepted", accepted}}.dump() + "\n"};
    });
}

HttpResult Engine::learner_state(const std::string& learner_id, std::optional<Timestamp> now) {
    return guarded([&] {
        const auto state = store_.state(learner_id);
        return HttpResult{200, learner_state_json(state, now.value_or(wall_clock_now()))};
    });
}

HttpResult Engine::health() const { return {200, "{\"status\":\"ok\"}\n"}; }

void Engine::flush() { store_.snapshot_all(); }

// ---------------------------------------------------------------------- http

struct HttpServer::Impl {
    Engine& engine;
    httplib::Server server;

    explicit Impl(Engine& e) : engine(e) {}
};

HttpServer::HttpServer(Engine& engine, std::size_t threads) : impl_(std::make_unique<Impl>(engine)) {
    auto& svr = impl_->server;
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

    auto reply = [](httplib::Response& res, const HttpResult& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    svr.Post("/v1/annotate", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, impl_->engine.annotate(req.body));
    });
    svr.Post("/v1/events", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, impl_->engine.events(req.body));
    });
    svr.Get(R"(/v1/learner/([^/]+)/state)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        std::optional<Timestamp> now;
        if (req.has_param("now")) {
            const auto raw = req.get_param_value("now");
            char* end = nullptr;
            const double v = std::strtod(raw.c_str(), &end);
            if (raw.empty() || *end != '\0' || !std::isfinite(v)) {
                reply(res, error_result(400, "query parameter 'now' must be a number of seconds"));
                return;
            }
            now = Timestamp{v};
        }
        reply(res, impl_->engine.learner_state(req.matches[1], now));
    });
    svr.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, impl_->engine.health());
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    auto& svr = impl_->server;
    const int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace broccoli
