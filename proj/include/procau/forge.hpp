#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "procau/events.hpp"
#include "procau/frames.hpp"
#include "procau/providers.hpp"

namespace procau::forge {

using causal::CausalSample;
using causal::ConfigLabel;
using causal::EventDesc;
using causal::EventId;

// A fabricated cause candidate scored by every model in the evaluation
// pool: its own language-only log-probability and the same scorer's value
// on the ground-truth cause text.
struct CandidateFakeEvent {
    EventDesc event;
    std::map<std::string, double> per_model_logprob;
    std::map<std::string, double> gt_logprob;
};

// Cross-model intersection rule: keep a candidate only when every model
// assigns it a strictly higher log-probability than the ground truth.
// Adding a model can only shrink the result.
std::set<EventId> select_fake_events(std::span<const CandidateFakeEvent> candidates,
                                     const std::set<std::string>& model_ids);

// CLIP-style quality measurements for one synthesized clip.
struct ClipQuality {
    double semantic_sim = 0.0;        // clip vs. its event text
    std::vector<double> scene_sims;   // clip vs. each remaining real clip
};

enum class SceneAggregate { Max, Mean };

enum class GateReason { Accepted, SemanticTooLow, SceneTooSimilar };

struct GateResult {
    bool accepted = false;
    GateReason reason = GateReason::Accepted;
    double semantic_sim = 0.0;
    double scene_stat = 0.0;

    explicit operator bool() const { return accepted; }
};

// Accepts a synthesized clip when it is semantically faithful
// (semantic_sim >= semantic_min) yet scene-inconsistent
// (aggregated scene similarity <= scene_max). Default thresholds 0.30
// and 0.70; the scene aggregator defaults to the worst case (max).
GateResult gate_fake_clip(const ClipQuality& q, double semantic_min = 0.30,
                          double scene_max = 0.70,
                          SceneAggregate agg = SceneAggregate::Max);

// Where fabricated events are spliced into the candidate event sequence.
enum class InsertPolicy { BeforeEffect, Append, Prepend };

// Per-configuration payload: the textual event variant and the visual
// variant. Diagnosis carries the two clip sets for captioning instead of
// a QA video.
struct BundlePayload {
    std::vector<EventDesc> events;
    FrameSequence video;
    std::vector<FrameSequence> caption_clips_real;
    std::vector<FrameSequence> caption_clips_fake;
};

struct ConfigurationBundle {
    CausalSample sample;
    std::map<ConfigLabel, BundlePayload> payloads;
};

// Inputs to bundle assembly beyond the annotation itself: the real video,
// the per-event clip ranges within it, and the gated fake clips for the
// cause events.
struct AssemblyInput {
    FrameSequence real_frames;
    std::map<EventId, std::pair<std::size_t, std::size_t>> clip_ranges; // [begin, end)
    std::map<EventId, FrameSequence> fake_clips; // one per cause event
    std::vector<EventDesc> fake_events;
    InsertPolicy insert_policy = InsertPolicy::BeforeEffect;
};

// Builds all five payloads from one sample. Veridicality passes the inputs
// through untouched; Plausibility splices the fabricated events into the
// text; Incongruence swaps each cause clip for its fake counterpart;
// Deprivation blanks the video; Diagnosis packages real and fake clips.
ConfigurationBundle assemble_bundle(const CausalSample& sample, const AssemblyInput& in);

// Typed view over the provider transport.
class Providers {
public:
    explicit Providers(Transport& transport) : transport_(transport) {}

    // Fabricated cause candidates with per-model and ground-truth scores.
    std::vector<CandidateFakeEvent>
    fake_event_candidates(const CausalSample& sample, const std::set<std::string>& model_ids);

    struct FakeClip {
        FrameSequence frames;
        ClipQuality quality;
    };

    // One synthesis attempt for the clip replacing `event_id`.
    FakeClip fake_clip(const std::string& sample_id, const EventId& event_id,
                       std::size_t frame_count, std::span<const std::size_t> shape,
                       std::size_t attempt);

private:
    Transport& transport_;
};

struct ForgeOptions {
    double semantic_min = 0.30;
    double scene_max = 0.70;
    SceneAggregate scene_aggregate = SceneAggregate::Max;
    std::size_t max_clip_retries = 5;
    InsertPolicy insert_policy = InsertPolicy::BeforeEffect;
};

struct ForgeOutcome {
    ConfigurationBundle bundle;
    std::set<EventId> selected_fake_events;
    std::map<EventId, std::size_t> clip_attempts;
};

// Full forging pipeline for one sample: select fake events by the
// intersection rule, synthesize-and-gate one fake clip per cause event
// (bounded retries, hard failure after), then assemble the bundle.
ForgeOutcome forge_sample(const CausalSample& sample, const FrameSequence& real_frames,
                          const std::map<EventId, std::pair<std::size_t, std::size_t>>& clip_ranges,
                          Providers& providers, const std::set<std::string>& model_ids,
                          const ForgeOptions& opts);

// Bundle (de)serialization: one JSON document per configuration.
std::string payload_to_json(const CausalSample& sample, ConfigLabel config,
                            const BundlePayload& payload);
BundlePayload payload_from_json(const std::string& text);

} // namespace procau::forge
