#include "procau/policy.hpp"

#include <cmath>
#include <fstream>

namespace procau::policy {

void Shape::validate() const {
    if (feature_dim == 0 || hidden == 0 || question_symbols == 0 || vocab < 2)
        throw InputError("policy shape with empty views");
}

std::string Shape::view_name(std::size_t index) const {
    if (index < enc_b_off()) return "frame_encoder.weight";
    if (index < q_emb_off()) return "frame_encoder.bias";
    if (index < p_emb_off()) return "question_embedding";
    if (index < head_w_off()) return "prefix_embedding";
    if (index < head_b_off()) return "head.weight";
    if (index < param_count()) return "head.bias";
    throw InputError("parameter index out of range");
}

Params init_params(const Shape& shape, double scale, Rng& rng) {
    shape.validate();
    Params p;
    p.shape = shape;
    p.theta.resize(shape.param_count());
    for (double& v : p.theta) v = rng.gaussian(0.0, scale);
    return p;
}

TokenDistribution forward_distribution(const Params& params, const FrameSequence& video,
                                       std::span<const int> question,
                                       std::span<const int> prefix) {
    const std::span<const double> theta(params.theta);
    const std::vector<double> pooled = encode_video<double>(params.shape, theta, video);
    const std::vector<double> lp =
        token_log_probs<double>(params.shape, theta, pooled, question, prefix);
    TokenDistribution d;
    d.log_probs = lp;
    d.probs.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) d.probs[i] = std::exp(lp[i]);
    return d;
}

std::vector<Rollout> sample_rollouts(const Params& params, const FrameSequence& video,
                                     std::span<const int> question, std::size_t group_size,
                                     std::size_t max_len, int end_token, Rng& rng) {
    if (group_size < 2) throw InputError("sample_rollouts: group size must be >= 2");
    const std::span<const double> theta(params.theta);
    const std::vector<double> pooled = encode_video<double>(params.shape, theta, video);

    std::vector<Rollout> group;
    group.reserve(group_size);
    for (std::size_t i = 0; i < group_size; ++i) {
        Rollout r;
        while (r.tokens.size() < max_len) {
            const std::vector<double> lp = token_log_probs<double>(
                params.shape, theta, pooled, question, r.tokens);
            TokenDistribution d;
            d.log_probs = lp;
            d.probs.resize(lp.size());
            for (std::size_t v = 0; v < lp.size(); ++v) d.probs[v] = std::exp(lp[v]);

            // Inverse-CDF draw; the final slot absorbs rounding slack.
            const double u = rng.real01();
            double cum = 0.0;
            int tok = static_cast<int>(d.probs.size()) - 1;
            for (std::size_t v = 0; v < d.probs.size(); ++v) {
                cum += d.probs[v];
                if (u < cum) {
                    tok = static_cast<int>(v);
                    break;
                }
            }
            r.total_logprob += d.log_probs[static_cast<std::size_t>(tok)];
            r.tokens.push_back(tok);
            r.dists.push_back(std::move(d));
            if (tok == end_token) break;
        }
        r.truncated = r.tokens.empty() || r.tokens.back() != end_token;
        group.push_back(std::move(r));
    }
    return group;
}

double sequence_logprob(const Params& params, const FrameSequence& video,
                        std::span<const int> question, std::span<const int> tokens) {
    const std::span<const double> theta(params.theta);
    const std::vector<double> pooled = encode_video<double>(params.shape, theta, video);
    double total = 0.0;
    std::vector<int> prefix;
    prefix.reserve(tokens.size());
    for (int tok : tokens) {
        const std::vector<double> lp =
            token_log_probs<double>(params.shape, theta, pooled, question, prefix);
        if (tok < 0 || static_cast<std::size_t>(tok) >= lp.size())
            throw InputError("sequence_logprob: token out of vocabulary");
        total += lp[static_cast<std::size_t>(tok)];
        prefix.push_back(tok);
    }
    return total;
}

std::vector<int> greedy_decode(const Params& params, const FrameSequence& video,
                               std::span<const int> question, std::size_t max_len,
                               int end_token) {
    const std::span<const double> theta(params.theta);
    const std::vector<double> pooled = encode_video<double>(params.shape, theta, video);
    std::vector<int> tokens;
    while (tokens.size() < max_len) {
        const std::vector<double> lp =
            token_log_probs<double>(params.shape, theta, pooled, question, tokens);
        int best = 0;
        for (std::size_t v = 1; v < lp.size(); ++v)
            if (lp[v] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(v);
        tokens.push_back(best);
        if (best == end_token) break;
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::uint32_t kCheckpointMagic = 0x5043434b; // "PCCK"
constexpr std::uint32_t kCheckpointVersion = 1;
} // namespace

void save_checkpoint(const std::filesystem::path& path, const Params& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InternalError("cannot write checkpoint '" + path.string() + "'");
    auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put32(kCheckpointMagic);
    put32(kCheckpointVersion);
    put32(static_cast<std::uint32_t>(params.shape.feature_dim));
    put32(static_cast<std::uint32_t>(params.shape.hidden));
    put32(static_cast<std::uint32_t>(params.shape.question_symbols));
    put32(static_cast<std::uint32_t>(params.shape.vocab));
    const std::uint64_t n = params.theta.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(params.theta.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw InternalError("checkpoint write failed");
}

Params load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
    auto get32 = [&](const char* what) {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw InputError(std::string("checkpoint truncated at ") + what);
        return v;
    };
    if (get32("magic") != kCheckpointMagic)
        throw InputError("'" + path.string() + "' is not a policy checkpoint");
    if (get32("version") != kCheckpointVersion)
        throw InputError("unsupported checkpoint version");
    Params p;
    p.shape.feature_dim = get32("feature_dim");
    p.shape.hidden = get32("hidden");
    p.shape.question_symbols = get32("question_symbols");
    p.shape.vocab = get32("vocab");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in) throw InputError("checkpoint truncated at parameter count");
    if (n != p.shape.param_count())
        throw InputError("checkpoint parameter count does not match its shape");
    p.theta.resize(n);
    in.read(reinterpret_cast<char*>(p.theta.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw InputError("checkpoint truncated in parameter data");
    return p;
}

} // namespace procau::policy
