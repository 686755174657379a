#include "procau/forge.hpp"

#include <algorithm>

namespace procau::forge {

using nlohmann::json;

std::set<EventId> select_fake_events(std::span<const CandidateFakeEvent> candidates,
                                     const std::set<std::string>& model_ids) {
    if (model_ids.empty()) throw InputError("select_fake_events: empty model pool");
    std::set<EventId> kept;
    for (const auto& c : candidates) {
        bool preferred_by_all = true;
        for (const auto& m : model_ids) {
            const auto own = c.per_model_logprob.find(m);
            const auto gt = c.gt_logprob.find(m);
            if (own == c.per_model_logprob.end() || gt == c.gt_logprob.end())
                throw InputError("candidate '" + c.event.id + "' missing score for model '" +
                                 m + "'");
            // Strict: a tie with the ground truth disqualifies the candidate.
            if (!(own->second > gt->second)) {
                preferred_by_all = false;
                break;
            }
        }
        if (preferred_by_all) kept.insert(c.event.id);
    }
    return kept;
}

GateResult gate_fake_clip(const ClipQuality& q, double semantic_min, double scene_max,
                          SceneAggregate agg) {
    if (q.scene_sims.empty()) throw InputError("gate_fake_clip: no scene similarities");
    auto in_unit = [](double v) { return v >= -1.0 && v <= 1.0; };
    if (!in_unit(semantic_min) || !in_unit(scene_max))
        throw InputError("gate_fake_clip: thresholds must lie in [-1, 1]");
    if (!in_unit(q.semantic_sim))
        throw InputError("gate_fake_clip: semantic cosine out of [-1, 1]");
    for (double s : q.scene_sims)
        if (!in_unit(s)) throw InputError("gate_fake_clip: scene cosine out of [-1, 1]");

    double scene_stat = 0.0;
    if (agg == SceneAggregate::Max) {
        scene_stat = *std::max_element(q.scene_sims.begin(), q.scene_sims.end());
    } else {
        for (double s : q.scene_sims) scene_stat += s;
        scene_stat /= static_cast<double>(q.scene_sims.size());
    }

    GateResult r;
    r.semantic_sim = q.semantic_sim;
    r.scene_stat = scene_stat;
    if (q.semantic_sim < semantic_min) {
        r.reason = GateReason::SemanticTooLow;
    } else if (scene_stat > scene_max) {
        r.reason = GateReason::SceneTooSimilar;
    } else {
        r.accepted = true;
    }
    return r;
}

namespace {

std::vector<EventDesc> splice_fake_events(const CausalSample& sample,
                                          const std::vector<EventDesc>& fakes,
                                          InsertPolicy policy) {
    std::vector<EventDesc> events;
    switch (policy) {
        case InsertPolicy::Prepend:
            events.insert(events.end(), fakes.begin(), fakes.end());
            events.insert(events.end(), sample.candidates.begin(), sample.candidates.end());
            break;
        case InsertPolicy::Append:
            events = sample.candidates;
            events.insert(events.end(), fakes.begin(), fakes.end());
            break;
        case InsertPolicy::BeforeEffect:
            // Keep annotation order and slot the fabricated causes in just
            // ahead of the effect event, where real causes live.
            for (const auto& e : sample.candidates) {
                if (e.id == sample.effect)
                    events.insert(events.end(), fakes.begin(), fakes.end());
                events.push_back(e);
            }
            break;
    }
    return events;
}

FrameSequence slice_clip(const FrameSequence& v, std::size_t begin, std::size_t end) {
    FrameSequence out;
    out.shape = v.shape;
    out.lo = v.lo;
    out.hi = v.hi;
    for (std::size_t f = begin; f < end; ++f) out.frames.push_back(v.frames[f]);
    return out;
}

} // namespace

ConfigurationBundle assemble_bundle(const CausalSample& sample, const AssemblyInput& in) {
    in.real_frames.validate();
    for (const auto& [id, range] : in.clip_ranges) {
        if (!sample.has_candidate(id))
            throw InputError("clip range for unknown event '" + id + "'");
        if (range.first >= range.second || range.second > in.real_frames.frame_count())
            throw InputError("bad clip range for event '" + id + "'");
    }

    ConfigurationBundle bundle;
    bundle.sample = sample;

    // Veridicality: inputs pass through bit-identical.
    {
        BundlePayload p;
        p.events = sample.candidates;
        p.video = in.real_frames;
        bundle.payloads.emplace(ConfigLabel::Veridicality, std::move(p));
    }

    // Plausibility: fabricated events spliced into the text, video untouched.
    {
        BundlePayload p;
        p.events = splice_fake_events(sample, in.fake_events, in.insert_policy);
        p.video = in.real_frames;
        bundle.payloads.emplace(ConfigLabel::Plausibility, std::move(p));
    }

    // Incongruence: every cause event's clip replaced by its fake clip.
    {
        BundlePayload p;
        p.events = sample.candidates;
        p.video = in.real_frames;
        for (const auto& cause : sample.cause_set) {
            const auto range = in.clip_ranges.find(cause);
            if (range == in.clip_ranges.end())
                throw InputError("Incongruence: no clip range for cause '" + cause + "'");
            const auto fake = in.fake_clips.find(cause);
            if (fake == in.fake_clips.end())
                throw InputError("Incongruence: no fake clip for cause '" + cause + "'");
            const auto [begin, end] = range->second;
            if (fake->second.frame_count() != end - begin)
                throw InputError("Incongruence: fake clip length mismatch for '" + cause + "'");
            if (fake->second.frame_size() != in.real_frames.frame_size())
                throw InputError("Incongruence: fake clip shape mismatch for '" + cause + "'");
            for (std::size_t f = begin; f < end; ++f)
                p.video.frames[f] = fake->second.frames[f - begin];
        }
        bundle.payloads.emplace(ConfigLabel::Incongruence, std::move(p));
    }

    // Deprivation: all-white video.
    {
        BundlePayload p;
        p.events = sample.candidates;
        p.video = make_blank_video(in.real_frames);
        bundle.payloads.emplace(ConfigLabel::Deprivation, std::move(p));
    }

    // Diagnosis: real and fake clip sets for captioning.
    {
        BundlePayload p;
        p.events = sample.candidates;
        p.video = in.real_frames;
        for (const auto& [id, range] : in.clip_ranges)
            p.caption_clips_real.push_back(slice_clip(in.real_frames, range.first, range.second));
        for (const auto& [id, clip] : in.fake_clips) p.caption_clips_fake.push_back(clip);
        bundle.payloads.emplace(ConfigLabel::Diagnosis, std::move(p));
    }

    return bundle;
}

// ---------------------------------------------------------------------------
// Providers

std::vector<CandidateFakeEvent>
Providers::fake_event_candidates(const CausalSample& sample,
                                 const std::set<std::string>& model_ids) {
    json req;
    req["op"] = "fake_event_candidates";
    req["sample_id"] = sample.sample_id;
    req["models"] = model_ids;
    json cause_texts = json::array();
    for (const auto& c : sample.candidates)
        if (sample.cause_set.count(c.id)) cause_texts.push_back(c.text);
    req["cause_texts"] = std::move(cause_texts);

    const json reply = transport_.call(req);
    std::vector<CandidateFakeEvent> out;
    try {
        for (const auto& c : reply.at("candidates")) {
            CandidateFakeEvent e;
            e.event.id = c.at("id").get<std::string>();
            e.event.text = c.value("text", std::string());
            for (auto it = c.at("logprob").begin(); it != c.at("logprob").end(); ++it)
                e.per_model_logprob[it.key()] = it.value().get<double>();
            for (auto it = c.at("gt_logprob").begin(); it != c.at("gt_logprob").end(); ++it)
                e.gt_logprob[it.key()] = it.value().get<double>();
            out.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed candidate provider reply: ") + e.what());
    }
    return out;
}

Providers::FakeClip Providers::fake_clip(const std::string& sample_id, const EventId& event_id,
                                         std::size_t frame_count,
                                         std::span<const std::size_t> shape,
                                         std::size_t attempt) {
    json req;
    req["op"] = "fake_clip";
    req["sample_id"] = sample_id;
    req["event_id"] = event_id;
    req["frames"] = frame_count;
    req["shape"] = std::vector<std::size_t>(shape.begin(), shape.end());
    req["attempt"] = attempt;

    const json reply = transport_.call(req);
    FakeClip clip;
    try {
        clip.frames.shape.assign(shape.begin(), shape.end());
        clip.frames.lo = reply.value("lo", 0.0);
        clip.frames.hi = reply.value("hi", 1.0);
        for (const auto& f : reply.at("frames"))
            clip.frames.frames.push_back(f.get<std::vector<double>>());
        clip.quality.semantic_sim = reply.at("semantic_sim").get<double>();
        clip.quality.scene_sims = reply.at("scene_sims").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed clip provider reply: ") + e.what());
    }
    clip.frames.validate();
    return clip;
}

ForgeOutcome forge_sample(const CausalSample& sample, const FrameSequence& real_frames,
                          const std::map<EventId, std::pair<std::size_t, std::size_t>>& clip_ranges,
                          Providers& providers, const std::set<std::string>& model_ids,
                          const ForgeOptions& opts) {
    ForgeOutcome out;

    const auto candidates = providers.fake_event_candidates(sample, model_ids);
    out.selected_fake_events = select_fake_events(candidates, model_ids);

    AssemblyInput in;
    in.real_frames = real_frames;
    in.clip_ranges = clip_ranges;
    in.insert_policy = opts.insert_policy;
    for (const auto& c : candidates)
        if (out.selected_fake_events.count(c.event.id)) in.fake_events.push_back(c.event);

    for (const auto& cause : sample.cause_set) {
        const auto range = clip_ranges.find(cause);
        if (range == clip_ranges.end())
            throw InputError("sample '" + sample.sample_id + "': no clip range for cause '" +
                             cause + "'");
        const std::size_t len = range->second.second - range->second.first;
        bool accepted = false;
        for (std::size_t attempt = 0; attempt < opts.max_clip_retries; ++attempt) {
            auto clip = providers.fake_clip(sample.sample_id, cause, len, real_frames.shape,
                                            attempt);
            out.clip_attempts[cause] = attempt + 1;
            if (gate_fake_clip(clip.quality, opts.semantic_min, opts.scene_max,
                               opts.scene_aggregate)) {
                in.fake_clips[cause] = std::move(clip.frames);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw InternalError("sample '" + sample.sample_id + "': no acceptable clip for '" +
                                cause + "' after " + std::to_string(opts.max_clip_retries) +
                                " attempts");
    }

    // The sample carries the fabricated ids so that Plausibility
    // predictions can be validated against it downstream.
    CausalSample enriched = sample;
    for (const auto& id : out.selected_fake_events) enriched.fabricated_set.insert(id);
    enriched.finalize_and_validate();

    out.bundle = assemble_bundle(enriched, in);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json frames_to_json(const FrameSequence& v) {
    json j;
    j["shape"] = v.shape;
    j["lo"] = v.lo;
    j["hi"] = v.hi;
    j["frames"] = v.frames;
    return j;
}

FrameSequence frames_from_json(const json& j) {
    FrameSequence v;
    v.shape = j.at("shape").get<std::vector<std::size_t>>();
    v.lo = j.at("lo").get<double>();
    v.hi = j.at("hi").get<double>();
    v.frames = j.at("frames").get<std::vector<std::vector<double>>>();
    v.validate();
    return v;
}

} // namespace

std::string payload_to_json(const CausalSample& sample, ConfigLabel config,
                            const BundlePayload& payload) {
    json j;
    j["sample_id"] = sample.sample_id;
    j["config"] = causal::to_string(config);
    json events = json::array();
    for (const auto& e : payload.events) events.push_back({{"id", e.id}, {"text", e.text}});
    j["events"] = std::move(events);
    j["video"] = frames_to_json(payload.video);
    if (config == ConfigLabel::Diagnosis) {
        json real = json::array();
        for (const auto& c : payload.caption_clips_real) real.push_back(frames_to_json(c));
        json fake = json::array();
        for (const auto& c : payload.caption_clips_fake) fake.push_back(frames_to_json(c));
        j["caption_clips_real"] = std::move(real);
        j["caption_clips_fake"] = std::move(fake);
    }
    return j.dump();
}

BundlePayload payload_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("payload: invalid JSON: ") + e.what());
    }
    BundlePayload p;
    try {
        for (const auto& e : j.at("events"))
            p.events.push_back({e.at("id").get<std::string>(), e.value("text", std::string())});
        p.video = frames_from_json(j.at("video"));
        if (j.contains("caption_clips_real"))
            for (const auto& c : j.at("caption_clips_real"))
                p.caption_clips_real.push_back(frames_from_json(c));
        if (j.contains("caption_clips_fake"))
            for (const auto& c : j.at("caption_clips_fake"))
                p.caption_clips_fake.push_back(frames_from_json(c));
    } catch (const json::exception& e) {
        throw InputError(std::string("payload: missing field: ") + e.what());
    }
    return p;
}

} // namespace procau::forge
