#include "broccoli/events.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace broccoli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kLogFile = "events.log";
constexpr const char* kSnapshotFile = "snapshot";

[[noreturn]] void throw_errno(const std::string& what, const fs::path& path) {
    throw Error(what + " " + path.string() + ": " + std::strerror(errno));
}

std::uint32_t crc32_of(std::string_view s) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        const auto n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("write failed for", path);
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
T field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("field '") + name + "' has the wrong type");
    }
}

ExposureEvent event_from(const json& j) {
    if (!j.is_object()) throw ParseError("event must be a JSON object");
    ExposureEvent e;
    e.learner_id = field<std::string>(j, "learner_id");
    if (!valid_learner_id(e.learner_id)) throw ParseError("invalid learner_id '" + e.learner_id + "'");
    e.doc_id = field<std::string>(j, "doc_id");
    const auto kind = field<std::string>(j, "kind");
    if (kind == "segment_read") {
        e.kind = EventKind::segment_read;
    } else if (kind == "reveal_click") {
        e.kind = EventKind::reveal_click;
    } else {
        throw ParseError("unknown event kind '" + kind + "'");
    }
    const auto lemma = field<std::string>(j, "lemma");
    try {
        e.lemma = Lemma(lemma);
    } catch (const ContractViolation& ex) {
        throw ParseError(ex.what());
    }
    if (!j.contains("span_id") || !j["span_id"].is_number_unsigned()) throw ParseError("field 'span_id' must be a non-negative integer");
    e.span_id = j["span_id"].get<std::size_t>();
    if (!j.contains("timestamp") || !j["timestamp"].is_number()) throw ParseError("field 'timestamp' must be a number");
    e.timestamp = Timestamp{j["timestamp"].get<double>()};
    if (!std::isfinite(e.timestamp.seconds)) throw ParseError("timestamp must be finite");
    return e;
}

json params_json(const TutorParams& p) {
    return {{"a", p.a}, {"b", p.b}, {"c", p.c}, {"d", p.d}, {"initial_half_life", p.initial_half_life}};
}

Snapshot replay(std::optional<Snapshot> snapshot, const std::vector<ExposureEvent>& log, const std::string& learner_id,
                const TutorParams& params, const EventPolicy& policy, RecoveryReport& report) {
    if (snapshot && snapshot->state.params() != params) {
        report.warnings.push_back("snapshot for '" + learner_id +
                                  "' was taken with different tutor parameters; rebuilding from the log");
        snapshot.reset();
    }
    if (snapshot && snapshot->events_applied > log.size()) {
        report.warnings.push_back("snapshot for '" + learner_id + "' covers " +
                                  std::to_string(snapshot->events_applied) + " events but the log holds only " +
                                  std::to_string(log.size()) + "; keeping the snapshot state");
        report.from_snapshot = true;
        snapshot->events_applied = log.size();
        report.log_events = log.size();
        return *snapshot;
    }
    report.from_snapshot = snapshot.has_value();
    Snapshot out = snapshot ? std::move(*snapshot) : Snapshot{LearnerState(learner_id, params), 0, std::nullopt};
    for (std::size_t i = out.events_applied; i < log.size(); ++i) {
        fold_event(out.state, log[i], policy);
        out.last_event = log[i].timestamp;
        ++report.replayed;
    }
    out.events_applied = log.size();
    report.log_events = log.size();
    return out;
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    return kind == EventKind::segment_read ? "segment_read" : "reveal_click";
}

std::string to_json(const ExposureEvent& e) {
    const json j{{"learner_id", e.learner_id}, {"doc_id", e.doc_id},   {"kind", to_string(e.kind)},
                 {"lemma", e.lemma.str()},     {"span_id", e.span_id}, {"timestamp", e.timestamp.seconds}};
    return j.dump();
}

ExposureEvent event_from_json(std::string_view text) {
    try {
        return event_from(json::parse(text));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("event is not valid JSON: ") + e.what());
    }
}

std::vector<ExposureEvent> parse_event_batch(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("request body is not valid JSON: ") + e.what());
    }
    if (j.is_object()) {
        if (!j.contains("events")) throw ParseError("missing field 'events'");
        j = j["events"];
    }
    if (!j.is_array()) throw ParseError("events must be an array");
    std::vector<ExposureEvent> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            out.push_back(event_from(j[i]));
        } catch (const ParseError& e) {
            throw ParseError("event " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

void fold_event(LearnerState& state, const ExposureEvent& event, const EventPolicy& policy) {
    if (event.kind == EventKind::segment_read || policy.reveal_is_exposure)
        state.apply_exposure(event.lemma, event.timestamp);
}

LearnerState fold_events(std::string learner_id, const TutorParams& params, std::span<const ExposureEvent> events,
                         const EventPolicy& policy) {
    LearnerState state(std::move(learner_id), params);
    for (const auto& e : events) fold_event(state, e, policy);
    return state;
}

bool valid_learner_id(std::string_view id) noexcept {
    if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
               c == '-';
    });
}

// ----------------------------------------------------------------- event log

std::string encode_log_record(const ExposureEvent& event) {
    const std::string body = to_json(event);
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", crc32_of(body));
    return std::string(crc) + '\t' + body + '\n';
}

EventLog::Contents EventLog::read(const fs::path& path) {
    Contents out;
    const std::string data = read_file(path);
    std::size_t pos = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            out.truncated = true;
            break;
        }
        const std::string_view line(data.data() + pos, nl - pos);
        const auto tab = line.find('\t');
        bool ok = tab == 8;
        if (ok) {
            const auto body = line.substr(9);
            char want[16];
            std::snprintf(want, sizeof want, "%08x", crc32_of(body));
            ok = line.substr(0, 8) == want;
            if (ok) {
                try {
                    out.events.push_back(event_from_json(body));
                } catch (const Error&) {
                    ok = false;
                }
            }
        }
        if (!ok) {
            out.truncated = true;
            break;
        }
        pos = nl + 1;
        out.valid_bytes = pos;
    }
    return out;
}

EventLog::EventLog(fs::path path) : path_(std::move(path)) {}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

EventLog::Contents EventLog::open() {
    auto contents = read(path_);
    if (fd_ >= 0) ::close(fd_);
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw_errno("cannot open event log", path_);
    if (contents.truncated) {
        if (::ftruncate(fd_, static_cast<off_t>(contents.valid_bytes)) != 0) throw_errno("cannot truncate", path_);
        ::fsync(fd_);
    }
    return contents;
}

void EventLog::append(std::span<const ExposureEvent> events) {
    if (fd_ < 0) throw Error("event log " + path_.string() + " is not open");
    std::string buffer;
    for (const auto& e : events) buffer += encode_log_record(e);
    write_all(fd_, buffer, path_);
    if (::fsync(fd_) != 0) throw_errno("fsync failed for", path_);
}

// ----------------------------------------------------------------- snapshots

std::string to_json(const Snapshot& s) {
    json memories = json::array();
    for (const auto& [lemma, m] : s.state.memories()) {
        memories.push_back({{"lemma", lemma.str()},
                            {"half_life", m.half_life},
                            {"last_exposure", m.last_exposure.seconds},
                            {"exposure_count", m.exposure_count}});
    }
    const json j{{"format", 1},
                 {"learner_id", s.state.learner_id()},
                 {"events_applied", s.events_applied},
                 {"last_event", s.last_event ? json(s.last_event->seconds) : json(nullptr)},
                 {"params", params_json(s.state.params())},
                 {"memories", memories}};
    return j.dump(1) + "\n";
}

Snapshot snapshot_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("snapshot is not valid JSON: ") + e.what());
    }
    if (field<int>(j, "format") != 1) throw ParseError("unsupported snapshot format");
    const auto p = field<json>(j, "params");
    TutorParams params{field<double>(p, "a"), field<double>(p, "b"), field<double>(p, "c"), field<double>(p, "d"),
                       field<double>(p, "initial_half_life")};
    Snapshot s{LearnerState(field<std::string>(j, "learner_id"), params), field<std::uint64_t>(j, "events_applied"),
               std::nullopt};
    if (j.contains("last_event") && !j["last_event"].is_null()) s.last_event = Timestamp{field<double>(j, "last_event")};
    for (const auto& m : field<json>(j, "memories")) {
        s.state.restore({Lemma(field<std::string>(m, "lemma")), field<double>(m, "half_life"),
                         Timestamp{field<double>(m, "last_exposure")}, field<std::uint64_t>(m, "exposure_count")});
    }
    return s;
}

void write_snapshot_atomic(const fs::path& path, const Snapshot& snapshot) {
    const std::string data = to_json(snapshot);
    fs::path tmp = path;
    tmp += ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw_errno("cannot write snapshot", tmp);
    try {
        write_all(fd, data, tmp);
        if (::fsync(fd) != 0) throw_errno("fsync failed for", tmp);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) throw_errno("cannot rename snapshot onto", path);
    fsync_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::optional<Snapshot> read_snapshot(const fs::path& path) {
    if (!fs::exists(path)) return std::nullopt;
    return snapshot_from_json(read_file(path));
}

Snapshot recover_learner(const fs::path& dir, const std::string& learner_id, const TutorParams& params,
                         const EventPolicy& policy, RecoveryReport* report) {
    RecoveryReport local;
    auto& r = report ? *report : local;
    const auto contents = EventLog::read(dir / kLogFile);
    r.log_truncated = contents.truncated;
    if (contents.truncated)
        r.warnings.push_back("event log for '" + learner_id + "' has a damaged tail after " +
                             std::to_string(contents.events.size()) + " valid records");
    return replay(read_snapshot(dir / kSnapshotFile), contents.events, learner_id, params, policy, r);
}

// --------------------------------------------------------------------- store

struct LearnerStore::Learner {
    explicit Learner(const fs::path& dir) : dir(dir), log(dir / kLogFile) {}

    fs::path dir;
    std::mutex write;
    std::shared_mutex read;
    Snapshot committed;
    EventLog log;
    std::size_t since_snapshot = 0;
};

LearnerStore::LearnerStore(fs::path root, Options options) : root_(std::move(root)), options_(options) {
    options_.params.validate();
    fs::create_directories(root_);
}

LearnerStore::~LearnerStore() = default;

LearnerStore::Learner* LearnerStore::load(const std::string& id, bool create) {
    if (!valid_learner_id(id)) throw ContractViolation("invalid learner id '" + id + "'");
    {
        std::shared_lock lock(map_mutex_);
        if (auto it = learners_.find(id); it != learners_.end()) return it->second.get();
    }
    std::unique_lock lock(map_mutex_);
    if (auto it = learners_.find(id); it != learners_.end()) return it->second.get();

    const fs::path dir = root_ / id;
    const bool present = fs::is_directory(dir);
    if (!present && !create) return nullptr;
    if (!present) {
        fs::create_directories(dir);
        fsync_dir(root_);
    }
    auto learner = std::make_unique<Learner>(dir);
    const auto contents = learner->log.open();
    RecoveryReport report;
    if (contents.truncated)
        report.warnings.push_back("event log for '" + id + "' had a damaged tail; truncated to " +
                                  std::to_string(contents.events.size()) + " records");
    learner->committed =
        replay(read_snapshot(dir / kSnapshotFile), contents.events, id, options_.params, options_.policy, report);
    if (!report.warnings.empty()) {
        std::lock_guard wl(warnings_mutex_);
        warnings_.insert(warnings_.end(), report.warnings.begin(), report.warnings.end());
    }
    auto* raw = learner.get();
    learners_.emplace(id, std::move(learner));
    return raw;
}

void LearnerStore::ensure(const std::string& learner_id) { load(learner_id, true); }

bool LearnerStore::exists(const std::string& learner_id) {
    if (!valid_learner_id(learner_id)) return false;
    return load(learner_id, false) != nullptr;
}

LearnerState LearnerStore::state(const std::string& learner_id) {
    auto* learner = valid_learner_id(learner_id) ? load(learner_id, false) : nullptr;
    if (!learner) throw UnknownLearner("unknown learner '" + learner_id + "'");
    std::shared_lock lock(learner->read);
    return learner->committed.state;
}

std::size_t LearnerStore::append(std::span<const ExposureEvent> events) {
    std::map<std::string, std::vector<ExposureEvent>> by_learner;
    for (const auto& e : events) by_learner[e.learner_id].push_back(e);

    std::vector<std::pair<Learner*, std::vector<ExposureEvent>*>> work;
    for (auto& [id, list] : by_learner) {
        auto* learner = valid_learner_id(id) ? load(id, false) : nullptr;
        if (!learner) throw UnknownLearner("unknown learner '" + id + "'");
        std::stable_sort(list.begin(), list.end(), [](const ExposureEvent& a, const ExposureEvent& b) {
            return a.timestamp < b.timestamp;
        });
        work.emplace_back(learner, &list);
    }

    // Map order gives every caller the same lock order.
    std::vector<std::unique_lock<std::mutex>> locks;
    for (auto& [learner, list] : work) locks.emplace_back(learner->write);

    for (auto& [learner, list] : work) {
        const auto& last = learner->committed.last_event;
        if (last && list->front().timestamp < *last)
            throw TimestampRegression("event at " + std::to_string(list->front().timestamp.seconds) +
                                      " precedes the latest logged event for '" + list->front().learner_id + "'");
    }

    for (auto& [learner, list] : work) {
        learner->log.append(*list);
        Snapshot next = learner->committed;
        for (const auto& e : *list) fold_event(next.state, e, options_.policy);
        next.events_applied += list->size();
        next.last_event = list->back().timestamp;
        {
            std::unique_lock lock(learner->read);
            learner->committed = std::move(next);
        }
        learner->since_snapshot += list->size();
        if (options_.snapshot_every && learner->since_snapshot >= options_.snapshot_every) snapshot_locked(*learner);
    }
    return events.size();
}

void LearnerStore::snapshot_locked(Learner& learner) {
    write_snapshot_atomic(learner.dir / kSnapshotFile, learner.committed);
    learner.since_snapshot = 0;
}

void LearnerStore::snapshot(const std::string& learner_id) {
    auto* learner = valid_learner_id(learner_id) ? load(learner_id, false) : nullptr;
    if (!learner) throw UnknownLearner("unknown learner '" + learner_id + "'");
    std::lock_guard lock(learner->write);
    snapshot_locked(*learner);
}

void LearnerStore::snapshot_all() {
    std::shared_lock lock(map_mutex_);
    for (auto& [id, learner] : learners_) {
        std::lock_guard wl(learner->write);
        snapshot_locked(*learner);
    }
}

std::vector<std::string> LearnerStore::take_warnings() {
    std::lock_guard lock(warnings_mutex_);
    return std::exchange(warnings_, {});
}

}  // namespace broccoli
