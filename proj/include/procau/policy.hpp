#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "procau/autodiff.hpp"
#include "procau/frames.hpp"
#include "procau/rng.hpp"

namespace procau::policy {

// Parameter layout of the autoregressive policy. The flat vector tiles
// into, in order:
//   frame encoder weight  (hidden x feature_dim)
//   frame encoder bias    (hidden)
//   question embeddings   (question_symbols x hidden)
//   prefix embeddings     (vocab x hidden)
//   output head weight    (vocab x hidden)
//   output head bias      (vocab)
struct Shape {
    std::size_t feature_dim = 0;
    std::size_t hidden = 32;
    std::size_t question_symbols = 0;
    std::size_t vocab = 0;

    std::size_t enc_w_off() const { return 0; }
    std::size_t enc_b_off() const { return hidden * feature_dim; }
    std::size_t q_emb_off() const { return enc_b_off() + hidden; }
    std::size_t p_emb_off() const { return q_emb_off() + question_symbols * hidden; }
    std::size_t head_w_off() const { return p_emb_off() + vocab * hidden; }
    std::size_t head_b_off() const { return head_w_off() + vocab * hidden; }
    std::size_t param_count() const { return head_b_off() + vocab; }

    std::string view_name(std::size_t index) const;
    void validate() const;

    bool operator==(const Shape& o) const = default;
};

struct Params {
    Shape shape;
    std::vector<double> theta;
};

Params init_params(const Shape& shape, double scale, Rng& rng);

// Linear ramp over frame index, 0.5 at the first frame to 1.5 at the last.
// Applied inside mean pooling so that temporal order shifts the pooled
// code; without it a permutation of frames would be invisible.
inline double position_weight(std::size_t f, std::size_t frame_count) {
    if (frame_count <= 1) return 1.0;
    return 0.5 + static_cast<double>(f) / static_cast<double>(frame_count - 1);
}

struct TokenDistribution {
    std::vector<double> probs;
    std::vector<double> log_probs;
};

// ---------------------------------------------------------------------------
// Scalar-generic forward pass. S is double or ad::Ad.

// tanh(W x + b) per frame, then position-weighted mean over frames.
template <typename S>
std::vector<S> encode_video(const Shape& shape, std::span<const S> theta,
                            const FrameSequence& video) {
    using ad::tanh; // found by ADL for Ad, std:: for double
    using std::tanh;
    const std::size_t d = shape.feature_dim;
    const std::size_t h = shape.hidden;
    if (video.frame_size() != d)
        throw InputError("encode_video: frame size " + std::to_string(video.frame_size()) +
                         " but encoder expects " + std::to_string(d));

    const std::size_t F = video.frame_count();
    std::vector<S> pooled(h, S(0.0));
    const double inv_f = 1.0 / static_cast<double>(F);
    for (std::size_t f = 0; f < F; ++f) {
        const double w = position_weight(f, F) * inv_f;
        const auto& x = video.frames[f];
        for (std::size_t j = 0; j < h; ++j) {
            S acc = theta[shape.enc_b_off() + j];
            const std::size_t row = shape.enc_w_off() + j * d;
            for (std::size_t k = 0; k < d; ++k) acc += theta[row + k] * S(x[k]);
            pooled[j] += S(w) * tanh(acc);
        }
    }
    return pooled;
}

// Head logits for the next token given the pooled video code, the question
// tokens and the already-emitted prefix tokens.
template <typename S>
std::vector<S> next_token_logits(const Shape& shape, std::span<const S> theta,
                                 std::span<const S> pooled, std::span<const int> question,
                                 std::span<const int> prefix) {
    const std::size_t h = shape.hidden;
    std::vector<S> state(pooled.begin(), pooled.end());
    for (int q : question) {
        if (q < 0 || static_cast<std::size_t>(q) >= shape.question_symbols)
            throw InputError("question token " + std::to_string(q) + " out of range");
        const std::size_t row = shape.q_emb_off() + static_cast<std::size_t>(q) * h;
        for (std::size_t j = 0; j < h; ++j) state[j] += theta[row + j];
    }
    for (int p : prefix) {
        if (p < 0 || static_cast<std::size_t>(p) >= shape.vocab)
            throw InputError("prefix token " + std::to_string(p) + " out of range");
        const std::size_t row = shape.p_emb_off() + static_cast<std::size_t>(p) * h;
        for (std::size_t j = 0; j < h; ++j) state[j] += theta[row + j];
    }

    std::vector<S> logits(shape.vocab);
    for (std::size_t v = 0; v < shape.vocab; ++v) {
        S acc = theta[shape.head_b_off() + v];
        const std::size_t row = shape.head_w_off() + v * h;
        for (std::size_t j = 0; j < h; ++j) acc += theta[row + j] * state[j];
        logits[v] = acc;
    }
    return logits;
}

// Log-softmax with max subtraction. The max enters as a constant, which
// leaves the gradient untouched (softmax is shift invariant).
template <typename S>
std::vector<S> log_softmax(std::span<const S> logits) {
    using ad::exp;
    using ad::log;
    using std::exp;
    using std::log;
    double mx = ad::value(logits[0]);
    for (const S& z : logits) mx = std::max(mx, ad::value(z));
    S total(0.0);
    for (const S& z : logits) total += exp(z - S(mx));
    const S log_z = log(total);
    std::vector<S> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - S(mx) - log_z;
    return out;
}

template <typename S>
std::vector<S> token_log_probs(const Shape& shape, std::span<const S> theta,
                               std::span<const S> pooled, std::span<const int> question,
                               std::span<const int> prefix) {
    const std::vector<S> z = next_token_logits(shape, theta, pooled, question, prefix);
    return log_softmax(std::span<const S>(z));
}

// ---------------------------------------------------------------------------
// Concrete (double) entry points.

TokenDistribution forward_distribution(const Params& params, const FrameSequence& video,
                                       std::span<const int> question,
                                       std::span<const int> prefix);

struct Rollout {
    std::vector<int> tokens;                 // ends with the end token unless truncated
    std::vector<TokenDistribution> dists;    // distribution at each emitted position
    double total_logprob = 0.0;
    bool truncated = false;
};

// G ancestral samples with recorded per-token distributions. Sequences are
// cut at max_len tokens; a missing end token sets `truncated`.
std::vector<Rollout> sample_rollouts(const Params& params, const FrameSequence& video,
                                     std::span<const int> question, std::size_t group_size,
                                     std::size_t max_len, int end_token, Rng& rng);

// Sum of per-token log-probs of `tokens` under the policy.
double sequence_logprob(const Params& params, const FrameSequence& video,
                        std::span<const int> question, std::span<const int> tokens);

// Greedy (argmax) decode.
std::vector<int> greedy_decode(const Params& params, const FrameSequence& video,
                               std::span<const int> question, std::size_t max_len,
                               int end_token);

// Checkpoints: versioned binary blob of the flat parameter vector plus the
// shape header.
void save_checkpoint(const std::filesystem::path& path, const Params& params);
Params load_checkpoint(const std::filesystem::path& path);

} // namespace procau::policy
