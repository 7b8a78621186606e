#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "broccoli/text.hpp"

namespace broccoli {

inline constexpr double kSecondsPerDay = 86400.0;

/// Wall-clock instant in seconds since the Unix epoch. Durations inside the
/// memory model are fractional days; conversion happens only here.
struct Timestamp {
    double seconds = 0.0;

    static constexpr Timestamp from_days(double days) noexcept { return {days * kSecondsPerDay}; }
    constexpr Timestamp plus_days(double days) const noexcept { return {seconds + days * kSecondsPerDay}; }

    friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Elapsed time from `from` to `to` in days (negative if `to` is earlier).
constexpr double days_between(Timestamp from, Timestamp to) noexcept {
    return (to.seconds - from.seconds) / kSecondsPerDay;
}

/// Constants of the boost function gamma = a * H^-b * c^-R + d. The shipped
/// defaults are placeholders rather than fitted values.
struct TutorParams {
    double a = 1.0;
    double b = 1.0;
    double c = 2.0;
    double d = 1.0;
    double initial_half_life = 0.25;  ///< days, for a lemma's first exposure

    /// Throws ContractViolation unless a, b, c > 0, d >= 1 and
    /// initial_half_life > 0 (all finite).
    void validate() const;

    friend bool operator==(const TutorParams&, const TutorParams&) = default;
};

struct LemmaMemory {
    Lemma lemma;
    double half_life = 0.0;  ///< H, days
    Timestamp last_exposure;
    std::uint64_t exposure_count = 0;

    friend bool operator==(const LemmaMemory&, const LemmaMemory&) = default;
};

/// R = 2^(-t/H) with t the days since the last exposure.
/// Throws ContractViolation when `now` precedes the last exposure.
double recall_probability(const LemmaMemory& memory, Timestamp now);

/// gamma = a * H^(-b) * c^(-R) + d. Throws ContractViolation when H <= 0 or
/// R lies outside [0, 1].
double boost_factor(double half_life, double recall, const TutorParams& params);

struct TutorScore {
    double recall = 0.0;
    double boost = 1.0;

    friend bool operator==(const TutorScore&, const TutorScore&) = default;
};

/// One learner's memory of every lemma it has been exposed to.
///
/// Not synchronized: callers serialize mutations per learner.
class LearnerState {
public:
    LearnerState() = default;
    explicit LearnerState(std::string learner_id, TutorParams params = {});

    const std::string& learner_id() const noexcept { return learner_id_; }
    const TutorParams& params() const noexcept { return params_; }
    const std::map<Lemma, LemmaMemory>& memories() const noexcept { return memories_; }

    const LemmaMemory* find(const Lemma& lemma) const;

    /// Records a (successful) exposure. A new lemma starts at the initial
    /// half-life; a known lemma has its half-life multiplied by the boost
    /// factor evaluated at the current recall. Throws ContractViolation when
    /// `now` precedes the lemma's last exposure.
    void apply_exposure(const Lemma& lemma, Timestamp now);

    /// Inserts a memory verbatim (used when restoring snapshots).
    void restore(LemmaMemory memory);

    friend bool operator==(const LearnerState&, const LearnerState&) = default;

private:
    std::string learner_id_;
    TutorParams params_;
    std::map<Lemma, LemmaMemory> memories_;
};

/// Recall and boost for each lemma. Unseen lemmas get R = 0 and the boost
/// evaluated at the initial half-life.
std::map<Lemma, TutorScore> tutor_scores(const LearnerState& state, std::span<const Lemma> lemmas, Timestamp now);

}  // namespace broccoli
