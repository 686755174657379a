#include "procau/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "procau/jsonl.hpp"

namespace procau::env {

using nlohmann::json;

void WorldSpec::validate() const {
    if (num_candidates < 2) throw InputError("WorldSpec: need at least two candidates");
    if (num_candidates > num_event_types)
        throw InputError("WorldSpec: more candidates than event types");
    if (feature_dim < 2 * num_event_types)
        throw InputError("WorldSpec: feature_dim must cover cause and effect channels");
    if (conflict_prob < 0.0 || conflict_prob > 1.0)
        throw InputError("WorldSpec: conflict_prob outside [0, 1]");
    if (frames_per_video < num_candidates + 1)
        throw InputError("WorldSpec: not enough frames for all events");
    if (!(signature_amp > 0.0) || signature_amp + background_noise > 1.0)
        throw InputError("WorldSpec: signatures must stay inside the value range");
}

PriorTable PriorTable::make_peaked(std::size_t types, double argmax_mass, std::uint64_t seed) {
    if (types < 2) throw InputError("PriorTable: need at least two types");
    if (argmax_mass <= 1.0 / static_cast<double>(types) || argmax_mass >= 1.0)
        throw InputError("PriorTable: argmax mass must make the argmax unique");
    PriorTable t;
    t.types = types;
    t.p.assign(types * types, 0.0);

    // Random permutation decides each effect's preferred cause type.
    Rng rng(Rng::mix(seed, 0x7072696f72ULL));
    std::vector<std::size_t> preferred(types);
    std::iota(preferred.begin(), preferred.end(), std::size_t{0});
    rng.shuffle(preferred);

    const double rest = (1.0 - argmax_mass) / static_cast<double>(types - 1);
    for (std::size_t e = 0; e < types; ++e) {
        for (std::size_t c = 0; c < types; ++c) t.p[e * types + c] = rest;
        t.p[e * types + preferred[e]] = argmax_mass;
    }
    return t;
}

std::size_t PriorTable::argmax_for(std::size_t effect) const {
    const auto begin = p.begin() + static_cast<std::ptrdiff_t>(effect * types);
    return static_cast<std::size_t>(std::distance(begin, std::max_element(begin, begin + static_cast<std::ptrdiff_t>(types))));
}

void PriorTable::validate() const {
    if (types < 2 || p.size() != types * types) throw InputError("PriorTable: bad dimensions");
    for (std::size_t e = 0; e < types; ++e) {
        double row = 0.0;
        for (std::size_t c = 0; c < types; ++c) row += at(e, c);
        if (std::abs(row - 1.0) > 1e-9)
            throw InputError("PriorTable: row " + std::to_string(e) + " does not sum to 1");
    }
}

causal::EventId type_event_id(std::size_t type) { return "t" + std::to_string(type); }

std::size_t type_from_event_id(const causal::EventId& id) {
    if (id.size() < 2 || id[0] != 't')
        throw InputError("not a candidate event id: '" + id + "'");
    return static_cast<std::size_t>(std::stoul(id.substr(1)));
}

std::set<causal::EventId> EnvSample::true_cause_set() const {
    return {type_event_id(true_cause_type)};
}

std::set<causal::EventId> EnvSample::shortcut_cause_set() const {
    return {type_event_id(shortcut_type)};
}

EnvSample generate_sample(const WorldSpec& spec, const PriorTable& prior, std::uint64_t index) {
    spec.validate();
    prior.validate();
    if (prior.types != spec.num_event_types)
        throw InputError("generate_sample: prior table size does not match the world");

    Rng rng(Rng::mix(Rng::mix(spec.seed, 0x656e76ULL), index));
    EnvSample s;
    s.index = index;

    const std::size_t K = spec.num_event_types;
    const std::size_t m = spec.num_candidates;
    s.effect_type = static_cast<std::size_t>(rng.below(K));
    s.shortcut_type = prior.argmax_for(s.effect_type);

    // Candidate types: the shortcut answer is always present so the prior
    // is actionable; the rest are drawn without replacement.
    std::vector<std::size_t> others;
    for (std::size_t t = 0; t < K; ++t)
        if (t != s.shortcut_type) others.push_back(t);
    rng.shuffle(others);
    s.candidate_types.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(m - 1));
    s.candidate_types.push_back(s.shortcut_type);
    std::sort(s.candidate_types.begin(), s.candidate_types.end());

    s.conflict = rng.real01() < spec.conflict_prob;
    if (s.conflict) {
        // Truth is any candidate other than the shortcut answer.
        std::vector<std::size_t> pool;
        for (std::size_t t : s.candidate_types)
            if (t != s.shortcut_type) pool.push_back(t);
        s.true_cause_type = pool[rng.below(pool.size())];
    } else {
        s.true_cause_type = s.shortcut_type;
    }

    // Event frame positions: cause first, effect second, non-causes after.
    const std::size_t n_events = m + 1;
    std::vector<std::size_t> positions = rng.sample_indices(spec.frames_per_video, n_events);
    std::sort(positions.begin(), positions.end());
    s.cause_frame = positions[0];
    s.effect_frame = positions[1];

    // Background noise everywhere, signatures on event frames. Cause type
    // k lives on channel k, effect type k on channel K + k.
    FrameSequence v;
    v.shape = {spec.feature_dim};
    v.lo = 0.0;
    v.hi = 1.0;
    v.frames.assign(spec.frames_per_video,
                    std::vector<double>(spec.feature_dim, 0.0));
    for (auto& frame : v.frames)
        for (double& x : frame) x = rng.real01() * spec.background_noise;

    v.frames[s.cause_frame][s.true_cause_type] += spec.signature_amp;
    v.frames[s.effect_frame][K + s.effect_type] += spec.signature_amp;
    std::size_t slot = 2;
    for (std::size_t t : s.candidate_types) {
        if (t == s.true_cause_type) continue;
        v.frames[positions[slot]][t] += spec.signature_amp;
        ++slot;
    }
    s.video = std::move(v);
    s.video.validate();

    s.question_tokens.reserve(m + 1);
    for (std::size_t t : s.candidate_types) s.question_tokens.push_back(static_cast<int>(t));
    s.question_tokens.push_back(static_cast<int>(K + s.effect_type));
    return s;
}

Dataset make_dataset(const WorldSpec& spec, const PriorTable& prior, std::size_t count,
                     std::uint64_t start_index) {
    Dataset d;
    d.spec = spec;
    d.prior = prior;
    d.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        d.samples.push_back(generate_sample(spec, prior, start_index + i));
    return d;
}

double verify(const EnvSample& sample, const std::set<causal::EventId>& answer,
              bool partial_credit) {
    for (const auto& id : answer) {
        if (id == none_event_id()) continue;
        const std::size_t t = type_from_event_id(id);
        if (!std::binary_search(sample.candidate_types.begin(), sample.candidate_types.end(), t))
            throw InputError("verify: answer id '" + id + "' is not a candidate");
    }
    const auto truth = sample.true_cause_set();
    if (!partial_credit) return answer == truth ? 1.0 : 0.0;
    std::size_t hit = 0;
    for (const auto& id : truth) hit += answer.count(id);
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::set<causal::EventId> prior_only_oracle(const EnvSample& sample) {
    return sample.shortcut_cause_set();
}

std::size_t rule_based_visual_answer(const WorldSpec& spec, const FrameSequence& video,
                                     const std::vector<std::size_t>& candidate_types) {
    const double threshold = spec.signature_amp * 0.5;
    std::size_t best_type = candidate_types.front();
    std::size_t best_pos = video.frame_count();
    for (std::size_t t : candidate_types) {
        for (std::size_t f = 0; f < video.frame_count(); ++f) {
            if (video.frames[f][t] > threshold) {
                if (f < best_pos) {
                    best_pos = f;
                    best_type = t;
                }
                break;
            }
        }
    }
    return best_type;
}

// ---------------------------------------------------------------------------
// Linear probes (softmax regression, plain gradient ascent)

namespace {

struct ProbeData {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    std::size_t classes;
};

ProbeData visual_features(const Dataset& d) {
    ProbeData out;
    out.classes = d.spec.num_event_types;
    for (const auto& s : d.samples) {
        std::vector<double> f;
        f.reserve(s.video.frame_count() * s.video.frame_size() + 1);
        for (const auto& frame : s.video.frames) f.insert(f.end(), frame.begin(), frame.end());
        f.push_back(1.0);
        out.x.push_back(std::move(f));
        out.y.push_back(s.true_cause_type);
    }
    return out;
}

ProbeData text_features(const Dataset& d) {
    ProbeData out;
    out.classes = d.spec.num_event_types;
    const std::size_t K = d.spec.num_event_types;
    for (const auto& s : d.samples) {
        std::vector<double> f(2 * K + 1, 0.0);
        for (std::size_t t : s.candidate_types) f[t] = 1.0;
        f[K + s.effect_type] = 1.0;
        f[2 * K] = 1.0;
        out.x.push_back(std::move(f));
        out.y.push_back(s.true_cause_type);
    }
    return out;
}

double probe_accuracy(const std::vector<double>& w, const ProbeData& d) {
    const std::size_t dim = d.x.front().size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        std::size_t best = 0;
        double best_score = -1e300;
        for (std::size_t c = 0; c < d.classes; ++c) {
            double z = 0.0;
            for (std::size_t k = 0; k < dim; ++k) z += w[c * dim + k] * d.x[i][k];
            if (z > best_score) {
                best_score = z;
                best = c;
            }
        }
        hits += best == d.y[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(d.x.size());
}

ProbeResult fit_probe(const ProbeData& train, const ProbeData& eval, std::size_t epochs,
                      double lr, std::uint64_t seed) {
    const std::size_t dim = train.x.front().size();
    const std::size_t C = train.classes;
    Rng rng(Rng::mix(seed, 0x70726f6265ULL));
    std::vector<double> w(C * dim);
    for (double& v : w) v = rng.gaussian(0.0, 0.01);

    std::vector<double> z(C), p(C);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = 0; i < train.x.size(); ++i) {
            const auto& x = train.x[i];
            double mx = -1e300;
            for (std::size_t c = 0; c < C; ++c) {
                z[c] = 0.0;
                for (std::size_t k = 0; k < dim; ++k) z[c] += w[c * dim + k] * x[k];
                mx = std::max(mx, z[c]);
            }
            double total = 0.0;
            for (std::size_t c = 0; c < C; ++c) total += (p[c] = std::exp(z[c] - mx));
            for (std::size_t c = 0; c < C; ++c) p[c] /= total;
            for (std::size_t c = 0; c < C; ++c) {
                const double g = (c == train.y[i] ? 1.0 : 0.0) - p[c];
                if (g == 0.0) continue;
                const double step = lr * g;
                for (std::size_t k = 0; k < dim; ++k) w[c * dim + k] += step * x[k];
            }
        }
    }

    ProbeResult r;
    r.train_accuracy = probe_accuracy(w, train);
    r.eval_accuracy = probe_accuracy(w, eval);
    return r;
}

} // namespace

ProbeResult train_grounded_probe(const Dataset& train, const Dataset& eval,
                                 std::size_t epochs, double lr, std::uint64_t seed) {
    return fit_probe(visual_features(train), visual_features(eval), epochs, lr, seed);
}

ProbeResult train_text_probe(const Dataset& train, const Dataset& eval, std::size_t epochs,
                             double lr, std::uint64_t seed) {
    return fit_probe(text_features(train), text_features(eval), epochs, lr, seed);
}

// ---------------------------------------------------------------------------
// Serialization

causal::CausalSample to_causal_sample(const EnvSample& s) {
    causal::CausalSample c;
    c.sample_id = "env-" + std::to_string(s.index);
    for (std::size_t t : s.candidate_types)
        c.candidates.push_back({type_event_id(t), "event type " + std::to_string(t)});
    const causal::EventId effect_id = "e" + std::to_string(s.effect_type);
    c.candidates.push_back({effect_id, "effect type " + std::to_string(s.effect_type)});
    c.effect = effect_id;
    c.cause_set = s.true_cause_set();
    c.none_option = none_event_id();
    c.finalize_and_validate();
    return c;
}

void write_dataset(const std::filesystem::path& jsonl_path,
                   const std::filesystem::path& frames_path, const Dataset& data) {
    std::ofstream out(jsonl_path);
    if (!out) throw InternalError("cannot write '" + jsonl_path.string() + "'");
    std::vector<FrameSequence> videos;
    videos.reserve(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const EnvSample& s = data.samples[i];
        json j = json::parse(causal::sample_to_json(to_causal_sample(s)));
        j["env"] = {
            {"index", s.index},
            {"candidate_types", s.candidate_types},
            {"effect_type", s.effect_type},
            {"true_cause_type", s.true_cause_type},
            {"shortcut_type", s.shortcut_type},
            {"conflict", s.conflict},
            {"cause_frame", s.cause_frame},
            {"effect_frame", s.effect_frame},
            {"video_index", i},
        };
        out << j.dump() << '\n';
        videos.push_back(s.video);
    }
    write_frames_bin(frames_path, videos);

    json meta;
    meta["world"] = {
        {"num_event_types", data.spec.num_event_types},
        {"num_candidates", data.spec.num_candidates},
        {"frames_per_video", data.spec.frames_per_video},
        {"feature_dim", data.spec.feature_dim},
        {"conflict_prob", data.spec.conflict_prob},
        {"seed", data.spec.seed},
        {"signature_amp", data.spec.signature_amp},
        {"background_noise", data.spec.background_noise},
    };
    meta["prior"] = {{"types", data.prior.types}, {"p", data.prior.p}};
    std::ofstream meta_out(jsonl_path.string() + ".meta.json");
    if (!meta_out) throw InternalError("cannot write dataset metadata");
    meta_out << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& jsonl_path,
                     const std::filesystem::path& frames_path) {
    Dataset d;
    {
        std::ifstream meta_in(jsonl_path.string() + ".meta.json");
        if (!meta_in) throw InputError("missing dataset metadata for '" + jsonl_path.string() + "'");
        json meta;
        meta_in >> meta;
        const auto& w = meta.at("world");
        d.spec.num_event_types = w.at("num_event_types").get<std::size_t>();
        d.spec.num_candidates = w.at("num_candidates").get<std::size_t>();
        d.spec.frames_per_video = w.at("frames_per_video").get<std::size_t>();
        d.spec.feature_dim = w.at("feature_dim").get<std::size_t>();
        d.spec.conflict_prob = w.at("conflict_prob").get<double>();
        d.spec.seed = w.at("seed").get<std::uint64_t>();
        d.spec.signature_amp = w.at("signature_amp").get<double>();
        d.spec.background_noise = w.at("background_noise").get<double>();
        d.prior.types = meta.at("prior").at("types").get<std::size_t>();
        d.prior.p = meta.at("prior").at("p").get<std::vector<double>>();
        d.prior.validate();
    }

    const std::vector<FrameSequence> videos = read_frames_bin(frames_path);
    std::ifstream in(jsonl_path);
    if (!in) throw InputError("cannot open '" + jsonl_path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("env"))
            throw InputError("line " + std::to_string(line_no) + ": not an environment sample");
        const auto& e = j.at("env");
        EnvSample s;
        s.index = e.at("index").get<std::uint64_t>();
        s.candidate_types = e.at("candidate_types").get<std::vector<std::size_t>>();
        s.effect_type = e.at("effect_type").get<std::size_t>();
        s.true_cause_type = e.at("true_cause_type").get<std::size_t>();
        s.shortcut_type = e.at("shortcut_type").get<std::size_t>();
        s.conflict = e.at("conflict").get<bool>();
        s.cause_frame = e.at("cause_frame").get<std::size_t>();
        s.effect_frame = e.at("effect_frame").get<std::size_t>();
        const auto vi = e.at("video_index").get<std::size_t>();
        if (vi >= videos.size())
            throw InputError("line " + std::to_string(line_no) + ": video index out of range");
        s.video = videos[vi];
        const std::size_t K = d.spec.num_event_types;
        for (std::size_t t : s.candidate_types) s.question_tokens.push_back(static_cast<int>(t));
        s.question_tokens.push_back(static_cast<int>(K + s.effect_type));
        d.samples.push_back(std::move(s));
    }
    return d;
}

} // namespace procau::env
