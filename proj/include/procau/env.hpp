#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

#include "procau/events.hpp"
#include "procau/frames.hpp"
#include "procau/rng.hpp"

namespace procau::env {

// Synthetic causal-video world with a planted textual-prior shortcut.
//
// Each sample shows num_candidates + 1 events as feature signatures written
// into frames: the true cause strictly before the effect, every non-cause
// after it. The visual rule "the earliest candidate caused the effect" is
// therefore temporal-order-coded, which makes frame shuffling the sharpest
// corruption. A co-occurrence prior over (effect type -> cause type)
// supplies the textually plausible answer; with probability conflict_prob
// the planted truth disagrees with it.
struct WorldSpec {
    std::size_t num_event_types = 6;   // cause-type alphabet; also the answer space
    std::size_t num_candidates = 4;    // candidates per sample (n - 1)
    std::size_t frames_per_video = 16; // F
    std::size_t feature_dim = 12;      // >= 2 * num_event_types signature channels
    double conflict_prob = 0.5;
    std::uint64_t seed = 0;

    double signature_amp = 0.9;   // event channel activation
    double background_noise = 0.04; // uniform noise ceiling on all channels

    void validate() const;
};

// Row-stochastic co-occurrence table: row = effect type, column = cause
// type. The argmax of a row is the textual-shortcut answer for that effect.
struct PriorTable {
    std::size_t types = 0;
    std::vector<double> p; // types x types, row-major

    static PriorTable make_peaked(std::size_t types, double argmax_mass, std::uint64_t seed);

    double at(std::size_t effect, std::size_t cause) const { return p[effect * types + cause]; }
    std::size_t argmax_for(std::size_t effect) const;
    void validate() const;
};

struct EnvSample {
    std::uint64_t index = 0;
    FrameSequence video;
    std::vector<int> question_tokens;        // candidate types, then types + effect
    std::vector<std::size_t> candidate_types; // ascending
    std::size_t effect_type = 0;
    std::size_t true_cause_type = 0;
    std::size_t shortcut_type = 0;
    bool conflict = false;
    std::size_t cause_frame = 0;
    std::size_t effect_frame = 0;

    std::set<causal::EventId> true_cause_set() const;
    std::set<causal::EventId> shortcut_cause_set() const;
};

// Event-id convention shared with the protocol layer: candidate type k is
// "t<k>", the effect is "e<type>" and the none option is "none".
causal::EventId type_event_id(std::size_t type);
std::size_t type_from_event_id(const causal::EventId& id);
inline const char* none_event_id() { return "none"; }

// Deterministic per (spec.seed, index).
EnvSample generate_sample(const WorldSpec& spec, const PriorTable& prior, std::uint64_t index);

struct Dataset {
    WorldSpec spec;
    PriorTable prior;
    std::vector<EnvSample> samples;
};

Dataset make_dataset(const WorldSpec& spec, const PriorTable& prior, std::size_t count,
                     std::uint64_t start_index = 0);

// Rule-based verifier: 1.0 on an exact match with the true cause set,
// else 0.0. With partial_credit the reward is the recall fraction instead.
// Unknown ids (outside candidates plus the none option) are an error.
double verify(const EnvSample& sample, const std::set<causal::EventId>& answer,
              bool partial_credit = false);

// What a text-only reasoner would answer: the prior argmax for the
// sample's effect type.
std::set<causal::EventId> prior_only_oracle(const EnvSample& sample);

// Reads the planted generative rule straight off the frames: the candidate
// whose signature fires earliest. Stands in for the Bayes-optimal visual
// answer in environment diagnostics.
std::size_t rule_based_visual_answer(const WorldSpec& spec, const FrameSequence& video,
                                     const std::vector<std::size_t>& candidate_types);

// ---------------------------------------------------------------------------
// Linear probes: establish that the world is solvable from frames and
// capped at (1 - conflict_prob) from text alone.

struct ProbeResult {
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
};

ProbeResult train_grounded_probe(const Dataset& train, const Dataset& eval,
                                 std::size_t epochs, double lr, std::uint64_t seed);
ProbeResult train_text_probe(const Dataset& train, const Dataset& eval,
                             std::size_t epochs, double lr, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Serialization: causal-core JSONL schema (with an "env" extension object
// per line) plus a binary frames sidecar.

causal::CausalSample to_causal_sample(const EnvSample& s);

void write_dataset(const std::filesystem::path& jsonl_path,
                   const std::filesystem::path& frames_path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& jsonl_path,
                     const std::filesystem::path& frames_path);

} // namespace procau::env
