#pragma once

#include <set>
#include <string>
#include <vector>

#include "procau/errors.hpp"

namespace procau::causal {

// Opaque event identifier, unique within one sample's candidate list.
using EventId = std::string;

// The five evaluation configurations. Veridicality pairs real events with
// the real video; Plausibility injects fabricated events; Incongruence
// swaps cause clips for fabricated ones; Deprivation blanks the video;
// Diagnosis is captioning over real and fabricated clips.
enum class ConfigLabel {
    Veridicality,
    Plausibility,
    Incongruence,
    Deprivation,
    Diagnosis,
};

const char* to_string(ConfigLabel c);
ConfigLabel config_from_string(const std::string& s);

// The four configurations that produce question-answer rows (Diagnosis is
// captioning and carries no causal answer).
inline constexpr ConfigLabel kQaConfigs[] = {
    ConfigLabel::Veridicality,
    ConfigLabel::Plausibility,
    ConfigLabel::Incongruence,
    ConfigLabel::Deprivation,
};

struct EventDesc {
    EventId id;
    std::string text;

    bool operator==(const EventDesc& o) const { return id == o.id && text == o.text; }
};

// One video's annotated event structure. `candidates` is the full
// chronologically ordered event list including the effect; the cause and
// non-cause sets partition the remaining candidates.
struct CausalSample {
    std::string sample_id;
    std::vector<EventDesc> candidates;
    EventId effect;
    std::set<EventId> cause_set;
    std::set<EventId> noncause_set; // derived: candidates minus effect minus causes
    std::set<EventId> fabricated_set;
    EventId none_option;

    bool has_candidate(const EventId& id) const;

    // Fills noncause_set from the other fields and checks every structural
    // invariant. Throws InputError with the first violation found.
    void finalize_and_validate();
};

// A model's answer for one (sample, configuration) pair. Either a set of
// predicted cause events or the dedicated none option, never both.
struct PredictionRecord {
    std::string sample_id;
    ConfigLabel config = ConfigLabel::Veridicality;
    std::set<EventId> predicted;
    bool none_flag = false;

    // Predictions may only reference the sample's candidates, its
    // fabricated events, or the none option. Unknown ids are a harness
    // bug and are rejected rather than scored as wrong.
    void validate_against(const CausalSample& sample) const;
};

} // namespace procau::causal
