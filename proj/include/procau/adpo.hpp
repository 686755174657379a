#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "procau/autodiff.hpp"
#include "procau/env.hpp"
#include "procau/perturb.hpp"
#include "procau/policy.hpp"

namespace procau::adpo {

// Per-token distribution pair from the two forward passes: one conditioned
// on the original video, one on its perturbed counterpart, both over the
// same rollout prefixes so any divergence is attributable to the visual
// input alone.
struct DistPair {
    policy::TokenDistribution original;
    policy::TokenDistribution perturbed;
};

// Everything one optimization step knows about a sampled rollout group.
struct GroupRollouts {
    FrameSequence video;
    FrameSequence perturbed_video;
    std::vector<int> question;
    std::vector<policy::Rollout> rollouts;          // sampled from `video` under theta_old
    std::vector<double> rewards;
    std::vector<double> advantages;
    std::vector<std::vector<double>> old_logprobs;  // per rollout, per token
    std::vector<std::vector<DistPair>> dual_dists;  // filled by dual_forward
    bool identity_perturbation = false;             // perturbed_video == video

    std::size_t group_size() const { return rollouts.size(); }
};

struct TrainConfig {
    double lambda = 0.01;          // anti-distillation coefficient
    std::size_t group_size = 5;    // rollouts per question
    double clip_epsilon = 0.2;
    double kl_beta = 0.04;         // reference-KL coefficient
    double learning_rate = 1e-6;
    perturb::Spec perturb{};
    std::optional<double> kl_cap;  // optional per-token cap on the repulsion KL
    double std_floor = 1e-8;
    std::uint64_t seed = 0;
    std::size_t steps = 2000;
    std::size_t max_answer_len = 4;
    double divergence_bound = 1e6; // abort when |theta|_inf exceeds this
    bool partial_reward = false;
    bool grpo_only = false;        // skip the regularizer branch entirely

    // Adam moments; "sgd" switches to plain gradient ascent.
    std::string optimizer = "adam";
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct StepStats {
    std::size_t step = 0;
    std::uint64_t sample_index = 0;
    double mean_reward = 0.0;
    double grpo_term = 0.0;
    double prcp_term = 0.0;
    double joint = 0.0;
    double grad_norm = 0.0;
    double theta_norm = 0.0;
    bool conflict_sample = false;
    std::optional<double> likelihood_gap;
};

// ---------------------------------------------------------------------------
// Objective pieces. Each is a template over the scalar type so the same
// code yields values (double) and exact gradients (ad::Ad).

// Group-standardized advantages with a zero-variance guard: a degenerate
// group (all rewards equal within std_floor) contributes no policy
// gradient. Population standard deviation.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor);

namespace detail {

template <typename S>
std::vector<std::vector<S>>
rollout_token_logprobs(const GroupRollouts& g, const policy::Shape& shape,
                       std::span<const S> theta, const FrameSequence& video) {
    const std::vector<S> pooled = policy::encode_video<S>(shape, theta, video);
    std::vector<std::vector<S>> out;
    out.reserve(g.rollouts.size());
    for (const auto& r : g.rollouts) {
        std::vector<S> per_token;
        per_token.reserve(r.tokens.size());
        std::vector<int> prefix;
        prefix.reserve(r.tokens.size());
        for (int tok : r.tokens) {
            const std::vector<S> lp = policy::token_log_probs<S>(
                shape, theta, std::span<const S>(pooled), g.question, prefix);
            per_token.push_back(lp[static_cast<std::size_t>(tok)]);
            prefix.push_back(tok);
        }
        out.push_back(std::move(per_token));
    }
    return out;
}

// KL(p || q) from log-prob vectors with q constant.
template <typename S>
S categorical_kl(std::span<const S> log_p, std::span<const double> log_q) {
    using ad::exp;
    using std::exp;
    S kl(0.0);
    for (std::size_t v = 0; v < log_p.size(); ++v)
        kl += exp(log_p[v]) * (log_p[v] - S(log_q[v]));
    return kl;
}

} // namespace detail

// Token-mean within each rollout, rollout-mean within the group, of
// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A).
template <typename S>
S clipped_surrogate(const GroupRollouts& g, const policy::Shape& shape,
                    std::span<const S> theta, double clip_epsilon) {
    using ad::exp;
    using ad::max;
    using ad::min;
    using std::exp;
    using std::max;
    using std::min;
    if (g.rollouts.empty()) throw InputError("clipped_surrogate: empty group");

    const std::size_t G = g.rollouts.size();
    const std::vector<S> pooled = policy::encode_video<S>(shape, theta, g.video);
    S total(0.0);
    for (std::size_t i = 0; i < G; ++i) {
        const auto& r = g.rollouts[i];
        const double adv = g.advantages[i];
        S rollout_sum(0.0);
        std::vector<int> prefix;
        for (std::size_t t = 0; t < r.tokens.size(); ++t) {
            const std::vector<S> lp = policy::token_log_probs<S>(
                shape, theta, std::span<const S>(pooled), g.question, prefix);
            const S ratio = exp(lp[static_cast<std::size_t>(r.tokens[t])] -
                                S(g.old_logprobs[i][t]));
            if (!std::isfinite(ad::value(ratio)))
                throw InternalError("clipped_surrogate: non-finite importance ratio");
            const S clipped = min(max(ratio, S(1.0 - clip_epsilon)), S(1.0 + clip_epsilon));
            rollout_sum += min(ratio * S(adv), clipped * S(adv));
            prefix.push_back(r.tokens[t]);
        }
        total += rollout_sum / S(static_cast<double>(r.tokens.size()));
    }
    return total / S(static_cast<double>(G));
}

// Exact per-token categorical KL(pi_theta || pi_ref) with the reference
// parameters frozen, averaged with the same token/rollout structure.
template <typename S>
S reference_kl(const GroupRollouts& g, const policy::Shape& shape, std::span<const S> theta,
               std::span<const double> ref_theta) {
    if (g.rollouts.empty()) throw InputError("reference_kl: empty group");

    const std::vector<S> pooled = policy::encode_video<S>(shape, theta, g.video);
    const std::vector<double> ref_pooled =
        policy::encode_video<double>(shape, ref_theta, g.video);

    S total(0.0);
    for (const auto& r : g.rollouts) {
        S rollout_sum(0.0);
        std::vector<int> prefix;
        for (int tok : r.tokens) {
            const std::vector<S> lp = policy::token_log_probs<S>(
                shape, theta, std::span<const S>(pooled), g.question, prefix);
            const std::vector<double> ref_lp = policy::token_log_probs<double>(
                shape, ref_theta, std::span<const double>(ref_pooled), g.question, prefix);
            rollout_sum += detail::categorical_kl(std::span<const S>(lp),
                                                  std::span<const double>(ref_lp));
            prefix.push_back(tok);
        }
        total += rollout_sum / S(static_cast<double>(r.tokens.size()));
    }
    return total / S(static_cast<double>(g.rollouts.size()));
}

// Clipped surrogate minus beta times the reference KL.
template <typename S>
S grpo_objective(const GroupRollouts& g, const policy::Shape& shape, std::span<const S> theta,
                 std::span<const double> ref_theta, double clip_epsilon, double beta) {
    S obj = clipped_surrogate(g, shape, theta, clip_epsilon);
    if (beta != 0.0) obj -= S(beta) * reference_kl(g, shape, theta, ref_theta);
    return obj;
}

// Two forward passes over the group's token prefixes, one per conditioning
// video, recorded into dual_dists. Pure in (theta, videos, rollouts).
void dual_forward(GroupRollouts& g, const policy::Shape& shape, std::span<const double> theta);

// Mean per-token KL between the original-conditioned distribution (live,
// carries gradient) and the perturbed-conditioned distribution (frozen
// teacher from dual_forward: its values enter the number, its parameters
// receive zero gradient). Identity perturbations vanish exactly: the KL of
// a distribution against itself is zero with zero gradient.
template <typename S>
S perception_sensitivity(const GroupRollouts& g, const policy::Shape& shape,
                         std::span<const S> theta,
                         std::optional<double> kl_cap = std::nullopt) {
    using ad::min;
    using std::min;
    if (g.dual_dists.size() != g.rollouts.size())
        throw InputError("perception_sensitivity: dual_dists not populated");
    if (g.identity_perturbation || g.perturbed_video == g.video) return S(0.0);

    const std::vector<S> pooled = policy::encode_video<S>(shape, theta, g.video);
    S total(0.0);
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
        const auto& r = g.rollouts[i];
        S rollout_sum(0.0);
        std::vector<int> prefix;
        for (std::size_t t = 0; t < r.tokens.size(); ++t) {
            const std::vector<S> lp = policy::token_log_probs<S>(
                shape, theta, std::span<const S>(pooled), g.question, prefix);
            S kl = detail::categorical_kl(std::span<const S>(lp),
                                          std::span<const double>(
                                              g.dual_dists[i][t].perturbed.log_probs));
            if (kl_cap) kl = min(kl, S(*kl_cap));
            rollout_sum += kl;
            prefix.push_back(r.tokens[t]);
        }
        total += rollout_sum / S(static_cast<double>(r.tokens.size()));
    }
    return total / S(static_cast<double>(g.rollouts.size()));
}

// Joint maximized quantity: GRPO surrogate plus lambda times the
// perception-sensitivity term. lambda = 0 skips the regularizer branch so
// the computation is literally the GRPO one.
template <typename S>
S adpo_objective(const GroupRollouts& g, const policy::Shape& shape, std::span<const S> theta,
                 std::span<const double> ref_theta, const TrainConfig& cfg) {
    S obj = grpo_objective(g, shape, theta, ref_theta, cfg.clip_epsilon, cfg.kl_beta);
    if (cfg.lambda != 0.0 && !cfg.grpo_only)
        obj += S(cfg.lambda) * perception_sensitivity(g, shape, theta, cfg.kl_cap);
    return obj;
}

// ---------------------------------------------------------------------------
// Group assembly and training

// Samples a group under the current parameters (theta_old = theta at the
// sampling instant), scores it with the environment verifier and fills
// advantages. Does not perturb; the trainer owns the perturbation stream.
GroupRollouts make_group(const env::EnvSample& sample, const policy::Params& params,
                         const TrainConfig& cfg, Rng& rollout_rng);

struct EvalSummary {
    std::size_t n = 0;
    std::size_t n_conflict = 0;
    double accuracy = 0.0;
    double conflict_accuracy = 0.0;
    double shortcut_rate_conflict = 0.0; // flip-rate analog: prior answers on conflicts
    double mean_gap = 0.0;
    double median_gap = 0.0;
};

EvalSummary evaluate_policy(const policy::Params& params, const env::Dataset& eval);

struct TrainResult {
    policy::Params params;
    std::vector<StepStats> trace;
    bool diverged = false;
    std::size_t steps_run = 0;
};

// One optimization epoch: per step, sample a group from the original
// video, normalize rewards, perturb with fresh randomness, run the dual
// forward pass and ascend the joint objective. theta_old refreshes every
// step; the reference policy stays frozen at the initial parameters.
TrainResult train(const env::Dataset& data, const policy::Params& init, const TrainConfig& cfg,
                  std::ostream* trace_jsonl = nullptr);

// ---------------------------------------------------------------------------
// Diagnostics

struct GapSummary {
    std::vector<double> gaps; // one per conflict sample
    double mean = 0.0;
    double median = 0.0;
    std::vector<std::size_t> histogram;
    double hist_lo = 0.0;
    double hist_hi = 0.0;
};

// log pi(correct answer) - log pi(shortcut answer) per conflict sample.
GapSummary likelihood_gap(const policy::Params& params, const env::Dataset& eval,
                          std::size_t histogram_bins = 20);

enum class RolloutCase {
    GroundedPositive, // matches the grounded answer, positive advantage
    GroundedNegative,
    PriorPositive,    // matches the prior-only answer on a conflict sample
    PriorNegative,
    Neither,
    ZeroAdvantage,
};

const char* to_string(RolloutCase c);

struct CaseEntry {
    RolloutCase rollout_case = RolloutCase::Neither;
    double advantage = 0.0;
    double cosine = 0.0; // between the rollout's surrogate gradient and its repulsion gradient
};

struct CaseReport {
    std::vector<CaseEntry> entries;
    std::map<RolloutCase, std::size_t> counts;
    std::map<RolloutCase, double> mean_cosine;
};

// Classifies each rollout by (grounded vs prior match) x sign(advantage)
// and reports the cosine between its GRPO gradient contribution and its
// perception-sensitivity gradient contribution.
CaseReport gradient_case_probe(const GroupRollouts& g, const policy::Shape& shape,
                               std::span<const double> theta, const env::EnvSample& sample,
                               const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Lambda sweep

struct SweepCell {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalSummary eval;
    bool diverged = false;
};

struct SweepReport {
    std::vector<SweepCell> cells;
};

// Callback builds (train dataset, eval dataset, initial params) for a
// seed; shared across lambda values so cells are paired.
struct SweepInputs {
    env::Dataset train_data;
    env::Dataset eval_data;
    policy::Params init;
};

SweepReport lambda_sweep(const std::function<SweepInputs(std::uint64_t)>& inputs_for_seed,
                         const TrainConfig& base, std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds);

// Answer set decoded from rollout tokens (types before the end token;
// the none token maps to the none option id).
std::set<causal::EventId> answer_set_from_tokens(std::span<const int> tokens,
                                                 std::size_t num_event_types);

} // namespace procau::adpo
