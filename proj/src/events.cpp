#include "procau/events.hpp"

#include <algorithm>
#include <unordered_set>

namespace procau::causal {

const char* to_string(ConfigLabel c) {
    switch (c) {
        case ConfigLabel::Veridicality: return "Veridicality";
        case ConfigLabel::Plausibility: return "Plausibility";
        case ConfigLabel::Incongruence: return "Incongruence";
        case ConfigLabel::Deprivation: return "Deprivation";
        case ConfigLabel::Diagnosis: return "Diagnosis";
    }
    throw InternalError("to_string: bad ConfigLabel");
}

ConfigLabel config_from_string(const std::string& s) {
    if (s == "Veridicality") return ConfigLabel::Veridicality;
    if (s == "Plausibility") return ConfigLabel::Plausibility;
    if (s == "Incongruence") return ConfigLabel::Incongruence;
    if (s == "Deprivation") return ConfigLabel::Deprivation;
    if (s == "Diagnosis") return ConfigLabel::Diagnosis;
    throw InputError("unknown configuration label: '" + s + "'");
}

bool CausalSample::has_candidate(const EventId& id) const {
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](const EventDesc& e) { return e.id == id; });
}

void CausalSample::finalize_and_validate() {
    if (sample_id.empty()) throw InputError("sample with empty sample_id");
    if (candidates.empty())
        throw InputError("sample '" + sample_id + "': empty candidate list");

    std::unordered_set<std::string> seen;
    for (const auto& e : candidates) {
        if (e.id.empty())
            throw InputError("sample '" + sample_id + "': empty event id");
        if (!seen.insert(e.id).second)
            throw InputError("sample '" + sample_id + "': duplicate candidate id '" + e.id + "'");
    }

    if (!has_candidate(effect))
        throw InputError("sample '" + sample_id + "': effect '" + effect +
                         "' not among candidates");
    if (none_option.empty())
        throw InputError("sample '" + sample_id + "': missing none_option");
    if (has_candidate(none_option))
        throw InputError("sample '" + sample_id + "': none_option '" + none_option +
                         "' must not be a candidate");
    if (cause_set.count(effect))
        throw InputError("sample '" + sample_id + "': effect listed as cause");

    noncause_set.clear();
    for (const auto& e : candidates) {
        if (e.id == effect) continue;
        if (!cause_set.count(e.id)) noncause_set.insert(e.id);
    }
    for (const auto& id : cause_set) {
        if (!has_candidate(id))
            throw InputError("sample '" + sample_id + "': cause '" + id +
                             "' not among candidates");
    }
    for (const auto& id : fabricated_set) {
        if (cause_set.count(id) || noncause_set.count(id))
            throw InputError("sample '" + sample_id + "': fabricated event '" + id +
                             "' collides with a real candidate");
    }
}

void PredictionRecord::validate_against(const CausalSample& sample) const {
    if (sample_id != sample.sample_id)
        throw InputError("prediction for '" + sample_id + "' paired with sample '" +
                         sample.sample_id + "'");
    if (none_flag && !predicted.empty())
        throw InputError("prediction for '" + sample_id +
                         "': none flag set alongside a non-empty predicted set");
    for (const auto& id : predicted) {
        if (sample.has_candidate(id)) continue;
        if (sample.fabricated_set.count(id)) continue;
        if (id == sample.none_option) continue;
        throw InputError("prediction for '" + sample_id + "' (" +
                         to_string(config) + "): unknown event id '" + id + "'");
    }
}

} // namespace procau::causal
