#include "broccoli/memory.hpp"

#include <cmath>
#include <sstream>

#include "broccoli/error.hpp"

namespace broccoli {

void TutorParams::validate() const {
    auto bad = [](const char* what, double v) {
        std::ostringstream os;
        os << "invalid tutor parameter " << what << " = " << v;
        throw ContractViolation(os.str());
    };
    for (auto [name, v] : {std::pair{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"initial_half_life", initial_half_life}}) {
        if (!std::isfinite(v)) bad(name, v);
    }
    if (!(a > 0)) bad("a", a);
    if (!(b > 0)) bad("b", b);
    if (!(c > 0)) bad("c", c);
    if (!(d >= 1)) bad("d", d);
    if (!(initial_half_life > 0)) bad("initial_half_life", initial_half_life);
}

double recall_probability(const LemmaMemory& memory, Timestamp now) {
    const double t = days_between(memory.last_exposure, now);
    if (t < 0) throw ContractViolation("recall_probability: now precedes the last exposure of '" + memory.lemma.str() + "'");
    if (!(memory.half_life > 0)) throw ContractViolation("recall_probability: non-positive half-life");
    return std::exp2(-t / memory.half_life);
}

double boost_factor(double half_life, double recall, const TutorParams& params) {
    if (!(half_life > 0)) throw ContractViolation("boost_factor: half-life must be positive");
    if (!(recall >= 0 && recall <= 1)) throw ContractViolation("boost_factor: recall must lie in [0, 1]");
    return params.a * std::pow(half_life, -params.b) * std::pow(params.c, -recall) + params.d;
}

LearnerState::LearnerState(std::string learner_id, TutorParams params)
    : learner_id_(std::move(learner_id)), params_(params) {
    params_.validate();
}

const LemmaMemory* LearnerState::find(const Lemma& lemma) const {
    const auto it = memories_.find(lemma);
    return it == memories_.end() ? nullptr : &it->second;
}

void LearnerState::apply_exposure(const Lemma& lemma, Timestamp now) {
    auto it = memories_.find(lemma);
    if (it == memories_.end()) {
        memories_.emplace(lemma, LemmaMemory{lemma, params_.initial_half_life, now, 1});
        return;
    }
    LemmaMemory& m = it->second;
    if (now < m.last_exposure)
        throw ContractViolation("apply_exposure: time regression for '" + lemma.str() + "'");
    const double recall = recall_probability(m, now);
    m.half_life *= boost_factor(m.half_life, recall, params_);
    m.last_exposure = now;
    ++m.exposure_count;
}

void LearnerState::restore(LemmaMemory memory) {
    if (!(memory.half_life > 0)) throw ContractViolation("restore: non-positive half-life");
    auto key = memory.lemma;
    memories_.insert_or_assign(std::move(key), std::move(memory));
}

std::map<Lemma, TutorScore> tutor_scores(const LearnerState& state, std::span<const Lemma> lemmas, Timestamp now) {
    std::map<Lemma, TutorScore> out;
    const auto& p = state.params();
    for (const auto& lemma : lemmas) {
        if (const auto* m = state.find(lemma)) {
            const double r = recall_probability(*m, now);
            out[lemma] = {r, boost_factor(m->half_life, r, p)};
        } else {
            out[lemma] = {0.0, boost_factor(p.initial_half_life, 0.0, p)};
        }
    }
    return out;
}

}  // namespace broccoli
