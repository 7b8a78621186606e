#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "broccoli/error.hpp"
#include "broccoli/memory.hpp"

namespace broccoli {

enum class EventKind { segment_read, reveal_click };

std::string_view to_string(EventKind kind) noexcept;

struct ExposureEvent {
    std::string learner_id;
    std::string doc_id;
    EventKind kind = EventKind::segment_read;
    Lemma lemma;
    std::size_t span_id = 0;
    Timestamp timestamp;

    friend bool operator==(const ExposureEvent&, const ExposureEvent&) = default;
};

/// Single-line JSON form, as stored in the event log.
std::string to_json(const ExposureEvent& event);
/// Throws ParseError on malformed or incomplete input.
ExposureEvent event_from_json(std::string_view json);
/// Accepts `{"events": [...]}` or a bare array.
std::vector<ExposureEvent> parse_event_batch(std::string_view json);

struct EventPolicy {
    bool reveal_is_exposure = false;  ///< treat reveal_click like segment_read
};

/// Applies one event to a learner's memory. segment_read is an exposure of the
/// event's lemma; reveal_click changes nothing unless the policy says so.
void fold_event(LearnerState& state, const ExposureEvent& event, const EventPolicy& policy);

/// Folds events in order onto a fresh state.
LearnerState fold_events(std::string learner_id, const TutorParams& params, std::span<const ExposureEvent> events,
                         const EventPolicy& policy);

/// The learner does not exist in the store.
class UnknownLearner : public Error {
public:
    using Error::Error;
};

/// An event is older than the learner's latest logged event.
class TimestampRegression : public Error {
public:
    using Error::Error;
};

/// Letters, digits, '.', '_' and '-', at most 128 characters, not "." or "..".
bool valid_learner_id(std::string_view id) noexcept;

/// Append-only file of `crc32hex<TAB>json` lines. Appends are fsync'd before
/// returning. Reading stops at the first record whose checksum or JSON does
/// not verify; `open` cuts the file back to the last good record.
class EventLog {
public:
    struct Contents {
        std::vector<ExposureEvent> events;
        std::uint64_t valid_bytes = 0;
        bool truncated = false;  ///< a damaged tail was found
    };

    static Contents read(const std::filesystem::path& path);

    explicit EventLog(std::filesystem::path path);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Reads the log, truncating a damaged tail in place.
    Contents open();
    void append(std::span<const ExposureEvent> events);

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

std::string encode_log_record(const ExposureEvent& event);

struct Snapshot {
    LearnerState state;
    std::uint64_t events_applied = 0;
    std::optional<Timestamp> last_event;
};

std::string to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(std::string_view json);

/// Writes to a temporary file, fsyncs, then renames over `path`.
void write_snapshot_atomic(const std::filesystem::path& path, const Snapshot& snapshot);
std::optional<Snapshot> read_snapshot(const std::filesystem::path& path);

struct RecoveryReport {
    std::uint64_t log_events = 0;
    std::uint64_t replayed = 0;
    bool from_snapshot = false;
    bool log_truncated = false;
    std::vector<std::string> warnings;
};

/// Latest snapshot plus the log records after it.
Snapshot recover_learner(const std::filesystem::path& dir, const std::string& learner_id, const TutorParams& params,
                         const EventPolicy& policy, RecoveryReport* report = nullptr);

/// Directory-per-learner event store.
///
/// Writes for one learner go through that learner's mutex; readers copy the
/// latest committed state under a shared lock and never wait on the disk.
class LearnerStore {
public:
    struct Options {
        TutorParams params;
        EventPolicy policy;
        std::size_t snapshot_every = 1000;  ///< 0 disables periodic snapshots
    };

    LearnerStore(std::filesystem::path root, Options options);
    ~LearnerStore();

    /// Loads or creates the learner. Throws ContractViolation for a bad id.
    void ensure(const std::string& learner_id);
    bool exists(const std::string& learner_id);

    /// Committed state. Throws UnknownLearner.
    LearnerState state(const std::string& learner_id);

    /// Validates the whole batch first (UnknownLearner, TimestampRegression),
    /// then appends each learner's events durably and folds them. Events of
    /// one learner are applied in timestamp order.
    std::size_t append(std::span<const ExposureEvent> events);

    void snapshot(const std::string& learner_id);
    void snapshot_all();

    const std::filesystem::path& root() const noexcept { return root_; }
    const Options& options() const noexcept { return options_; }
    std::vector<std::string> take_warnings();

private:
    struct Learner;
    Learner* load(const std::string& learner_id, bool create);
    void snapshot_locked(Learner& learner);

    std::filesystem::path root_;
    Options options_;
    std::shared_mutex map_mutex_;
    std::map<std::string, std::unique_ptr<Learner>> learners_;
    std::mutex warnings_mutex_;
    std::vector<std::string> warnings_;
};

}  // namespace broccoli
