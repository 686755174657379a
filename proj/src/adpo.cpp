#include "procau/adpo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "procau/stats.hpp"

namespace procau::adpo {

using nlohmann::json;

void TrainConfig::validate() const {
    if (lambda < 0.0) throw InputError("TrainConfig: lambda must be >= 0");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
        throw InputError("TrainConfig: clip epsilon must lie in (0, 1)");
    if (kl_beta < 0.0) throw InputError("TrainConfig: kl beta must be >= 0");
    if (group_size < 2) throw InputError("TrainConfig: group size must be >= 2");
    if (!(learning_rate > 0.0)) throw InputError("TrainConfig: learning rate must be > 0");
    if (steps == 0) throw InputError("TrainConfig: zero steps");
    if (max_answer_len == 0) throw InputError("TrainConfig: zero answer length");
    if (std_floor <= 0.0) throw InputError("TrainConfig: std floor must be > 0");
    if (optimizer != "adam" && optimizer != "sgd")
        throw InputError("TrainConfig: optimizer must be 'adam' or 'sgd'");
    perturb.validate();
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2) throw InputError("group_advantages: need at least two rewards");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    const double sd = std::sqrt(var);

    std::vector<double> adv(rewards.size(), 0.0);
    if (sd < std_floor) return adv; // degenerate group: no policy gradient
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

std::set<causal::EventId> answer_set_from_tokens(std::span<const int> tokens,
                                                 std::size_t num_event_types) {
    const int none_token = static_cast<int>(num_event_types);
    const int end_token = none_token + 1;
    std::set<causal::EventId> out;
    for (int tok : tokens) {
        if (tok == end_token) break;
        if (tok == none_token) {
            out.insert(env::none_event_id());
        } else {
            out.insert(env::type_event_id(static_cast<std::size_t>(tok)));
        }
    }
    return out;
}

namespace {

void check_compat(const policy::Shape& shape, const env::WorldSpec& spec) {
    if (shape.vocab != spec.num_event_types + 2)
        throw InputError("policy vocabulary does not match the environment's answer space");
    if (shape.question_symbols != 2 * spec.num_event_types)
        throw InputError("policy question table does not match the environment");
    if (shape.feature_dim != spec.feature_dim)
        throw InputError("policy feature dim does not match the environment");
}

// Reward for one rollout: answers referencing a non-candidate type are
// simply wrong (reward 0) rather than a verifier error, since the policy
// head ranges over every type token.
double rollout_reward(const env::EnvSample& sample, std::span<const int> tokens,
                      std::size_t num_event_types, bool partial) {
    const auto answer = answer_set_from_tokens(tokens, num_event_types);
    if (answer.empty()) return 0.0;
    for (const auto& id : answer) {
        if (id == env::none_event_id()) continue;
        const std::size_t t = env::type_from_event_id(id);
        if (!std::binary_search(sample.candidate_types.begin(), sample.candidate_types.end(), t))
            return 0.0;
    }
    return env::verify(sample, answer, partial);
}

} // namespace

GroupRollouts make_group(const env::EnvSample& sample, const policy::Params& params,
                         const TrainConfig& cfg, Rng& rollout_rng) {
    const std::size_t K = params.shape.vocab - 2;
    const int end_token = static_cast<int>(K) + 1;

    GroupRollouts g;
    g.video = sample.video;
    g.question = sample.question_tokens;
    g.rollouts = policy::sample_rollouts(params, g.video, g.question, cfg.group_size,
                                         cfg.max_answer_len, end_token, rollout_rng);

    g.rewards.reserve(g.rollouts.size());
    g.old_logprobs.reserve(g.rollouts.size());
    for (const auto& r : g.rollouts) {
        g.rewards.push_back(rollout_reward(sample, r.tokens, K, cfg.partial_reward));
        std::vector<double> lps;
        lps.reserve(r.tokens.size());
        for (std::size_t t = 0; t < r.tokens.size(); ++t)
            lps.push_back(r.dists[t].log_probs[static_cast<std::size_t>(r.tokens[t])]);
        g.old_logprobs.push_back(std::move(lps));
    }
    g.advantages = group_advantages(g.rewards, cfg.std_floor);
    return g;
}

void dual_forward(GroupRollouts& g, const policy::Shape& shape, std::span<const double> theta) {
    g.identity_perturbation = g.perturbed_video == g.video;

    const std::vector<double> pooled_orig = policy::encode_video<double>(shape, theta, g.video);
    const std::vector<double> pooled_pert =
        policy::encode_video<double>(shape, theta, g.perturbed_video);

    g.dual_dists.assign(g.rollouts.size(), {});
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
        const auto& r = g.rollouts[i];
        std::vector<int> prefix;
        g.dual_dists[i].reserve(r.tokens.size());
        for (int tok : r.tokens) {
            DistPair pair;
            pair.original.log_probs = policy::token_log_probs<double>(
                shape, theta, std::span<const double>(pooled_orig), g.question, prefix);
            pair.perturbed.log_probs = policy::token_log_probs<double>(
                shape, theta, std::span<const double>(pooled_pert), g.question, prefix);
            pair.original.probs.resize(pair.original.log_probs.size());
            pair.perturbed.probs.resize(pair.perturbed.log_probs.size());
            for (std::size_t v = 0; v < pair.original.log_probs.size(); ++v) {
                pair.original.probs[v] = std::exp(pair.original.log_probs[v]);
                pair.perturbed.probs[v] = std::exp(pair.perturbed.log_probs[v]);
            }
            g.dual_dists[i].push_back(std::move(pair));
            prefix.push_back(tok);
        }
    }
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;
};

void ascend(std::vector<double>& theta, std::span<const double> grad, const TrainConfig& cfg,
            AdamState& adam) {
    if (cfg.optimizer == "sgd") {
        for (std::size_t k = 0; k < theta.size(); ++k)
            theta[k] += cfg.learning_rate * grad[k];
        return;
    }
    if (adam.m.empty()) {
        adam.m.assign(theta.size(), 0.0);
        adam.v.assign(theta.size(), 0.0);
    }
    ++adam.t;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    for (std::size_t k = 0; k < theta.size(); ++k) {
        adam.m[k] = b1 * adam.m[k] + (1.0 - b1) * grad[k];
        adam.v[k] = b2 * adam.v[k] + (1.0 - b2) * grad[k] * grad[k];
        const double mhat = adam.m[k] / corr1;
        const double vhat = adam.v[k] / corr2;
        theta[k] += cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

double inf_norm(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
}

double l2_norm(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    return std::sqrt(n);
}

std::vector<int> answer_tokens(std::size_t type, std::size_t K) {
    return {static_cast<int>(type), static_cast<int>(K) + 1};
}

void write_trace_line(std::ostream& out, const StepStats& s) {
    json j;
    j["step"] = s.step;
    j["sample_index"] = s.sample_index;
    j["mean_reward"] = s.mean_reward;
    j["grpo"] = s.grpo_term;
    j["prcp"] = s.prcp_term;
    j["joint"] = s.joint;
    j["grad_norm"] = s.grad_norm;
    j["theta_norm"] = s.theta_norm;
    j["conflict"] = s.conflict_sample;
    if (s.likelihood_gap) j["likelihood_gap"] = *s.likelihood_gap;
    out << j.dump() << '\n';
}

} // namespace

TrainResult train(const env::Dataset& data, const policy::Params& init, const TrainConfig& cfg,
                  std::ostream* trace_jsonl) {
    cfg.validate();
    if (data.samples.empty()) throw InputError("train: empty dataset");
    check_compat(init.shape, data.spec);

    TrainResult result;
    result.params = init;
    const std::vector<double> ref_theta = init.theta; // frozen reference
    const policy::Shape& shape = init.shape;
    const std::size_t K = shape.vocab - 2;

    SeedStream rollout_stream(cfg.seed, 0x726f6c6cULL);
    perturb::Spec pspec = cfg.perturb;
    pspec.seed = Rng::mix(cfg.seed, cfg.perturb.seed);
    perturb::Perturber perturber(pspec);

    AdamState adam;
    ad::Tape tape;
    std::vector<double> grad;
    result.trace.reserve(cfg.steps);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const env::EnvSample& sample = data.samples[step % data.samples.size()];
        Rng rollout_rng = rollout_stream.at(step);

        GroupRollouts group = make_group(sample, result.params, cfg, rollout_rng);
        if (!cfg.grpo_only) {
            group.perturbed_video = perturber.next(group.video);
            dual_forward(group, shape, result.params.theta);
        }

        StepStats stats;
        stats.step = step;
        stats.sample_index = sample.index;
        stats.conflict_sample = sample.conflict;
        stats.mean_reward = 0.0;
        for (double r : group.rewards) stats.mean_reward += r;
        stats.mean_reward /= static_cast<double>(group.rewards.size());

        const std::span<const double> theta_now(result.params.theta);
        stats.grpo_term = grpo_objective<double>(group, shape, theta_now, ref_theta,
                                                 cfg.clip_epsilon, cfg.kl_beta);
        stats.prcp_term = cfg.grpo_only
                              ? 0.0
                              : perception_sensitivity<double>(group, shape, theta_now,
                                                               cfg.kl_cap);
        stats.joint = adpo_objective<double>(group, shape, theta_now, ref_theta, cfg);
        if (sample.conflict) {
            const auto correct = answer_tokens(sample.true_cause_type, K);
            const auto shortcut = answer_tokens(sample.shortcut_type, K);
            stats.likelihood_gap =
                policy::sequence_logprob(result.params, sample.video, sample.question_tokens,
                                         correct) -
                policy::sequence_logprob(result.params, sample.video, sample.question_tokens,
                                         shortcut);
        }

        ad::Objective obj;
        obj.value_ad = [&](ad::Tape&, std::span<const ad::Ad> th) {
            return adpo_objective<ad::Ad>(group, shape, th, ref_theta, cfg);
        };
        ad::gradient(tape, result.params.theta, obj, grad);

        stats.grad_norm = l2_norm(grad);
        ascend(result.params.theta, grad, cfg, adam);
        stats.theta_norm = l2_norm(result.params.theta);

        result.trace.push_back(stats);
        if (trace_jsonl) write_trace_line(*trace_jsonl, stats);
        result.steps_run = step + 1;

        if (!std::isfinite(stats.joint) || inf_norm(result.params.theta) > cfg.divergence_bound) {
            result.diverged = true;
            break;
        }
    }
    return result;
}

EvalSummary evaluate_policy(const policy::Params& params, const env::Dataset& eval) {
    check_compat(params.shape, eval.spec);
    const std::size_t K = params.shape.vocab - 2;
    const int end_token = static_cast<int>(K) + 1;

    EvalSummary s;
    std::vector<double> gaps;
    std::size_t correct = 0, conflict_correct = 0, conflict_shortcut = 0;
    for (const auto& sample : eval.samples) {
        const auto tokens = policy::greedy_decode(params, sample.video, sample.question_tokens,
                                                  4, end_token);
        const auto answer = answer_set_from_tokens(tokens, K);
        const bool is_correct = answer == sample.true_cause_set();
        correct += is_correct ? 1 : 0;
        if (sample.conflict) {
            ++s.n_conflict;
            conflict_correct += is_correct ? 1 : 0;
            conflict_shortcut += answer == sample.shortcut_cause_set() ? 1 : 0;
            const auto ct = answer_tokens(sample.true_cause_type, K);
            const auto st = answer_tokens(sample.shortcut_type, K);
            gaps.push_back(policy::sequence_logprob(params, sample.video, sample.question_tokens,
                                                    ct) -
                           policy::sequence_logprob(params, sample.video, sample.question_tokens,
                                                    st));
        }
    }
    s.n = eval.samples.size();
    s.accuracy = s.n ? static_cast<double>(correct) / static_cast<double>(s.n) : 0.0;
    if (s.n_conflict) {
        s.conflict_accuracy =
            static_cast<double>(conflict_correct) / static_cast<double>(s.n_conflict);
        s.shortcut_rate_conflict =
            static_cast<double>(conflict_shortcut) / static_cast<double>(s.n_conflict);
        s.mean_gap = stats::mean(gaps);
        s.median_gap = stats::median(gaps);
    }
    return s;
}

GapSummary likelihood_gap(const policy::Params& params, const env::Dataset& eval,
                          std::size_t histogram_bins) {
    const std::size_t K = params.shape.vocab - 2;
    GapSummary g;
    for (const auto& sample : eval.samples) {
        if (!sample.conflict) continue;
        const std::vector<int> correct = {static_cast<int>(sample.true_cause_type),
                                          static_cast<int>(K) + 1};
        const std::vector<int> shortcut = {static_cast<int>(sample.shortcut_type),
                                           static_cast<int>(K) + 1};
        g.gaps.push_back(
            policy::sequence_logprob(params, sample.video, sample.question_tokens, correct) -
            policy::sequence_logprob(params, sample.video, sample.question_tokens, shortcut));
    }
    if (g.gaps.empty()) throw InputError("likelihood_gap: no conflict samples in the set");
    g.mean = stats::mean(g.gaps);
    g.median = stats::median(g.gaps);

    g.hist_lo = *std::min_element(g.gaps.begin(), g.gaps.end());
    g.hist_hi = *std::max_element(g.gaps.begin(), g.gaps.end());
    if (g.hist_hi <= g.hist_lo) g.hist_hi = g.hist_lo + 1.0;
    g.histogram.assign(histogram_bins, 0);
    for (double v : g.gaps) {
        auto bin = static_cast<std::size_t>(static_cast<double>(histogram_bins) *
                                            (v - g.hist_lo) / (g.hist_hi - g.hist_lo));
        if (bin >= histogram_bins) bin = histogram_bins - 1;
        ++g.histogram[bin];
    }
    return g;
}

// ---------------------------------------------------------------------------
// Gradient case probe

const char* to_string(RolloutCase c) {
    switch (c) {
        case RolloutCase::GroundedPositive: return "grounded+";
        case RolloutCase::GroundedNegative: return "grounded-";
        case RolloutCase::PriorPositive: return "prior+";
        case RolloutCase::PriorNegative: return "prior-";
        case RolloutCase::Neither: return "neither";
        case RolloutCase::ZeroAdvantage: return "zero-advantage";
    }
    throw InternalError("bad RolloutCase");
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

} // namespace

CaseReport gradient_case_probe(const GroupRollouts& g, const policy::Shape& shape,
                               std::span<const double> theta, const env::EnvSample& sample,
                               const TrainConfig& cfg) {
    if (g.dual_dists.size() != g.rollouts.size())
        throw InputError("gradient_case_probe: dual_dists not populated");
    const std::size_t K = shape.vocab - 2;
    const auto truth = sample.true_cause_set();
    const auto prior = env::prior_only_oracle(sample);

    CaseReport report;
    ad::Tape tape;
    std::vector<double> grad_surr, grad_prcp;
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
        // Single-rollout slice; the 1/G factor drops out of the cosine.
        GroupRollouts one;
        one.video = g.video;
        one.perturbed_video = g.perturbed_video;
        one.identity_perturbation = g.identity_perturbation;
        one.question = g.question;
        one.rollouts = {g.rollouts[i]};
        one.rewards = {g.rewards[i]};
        one.advantages = {g.advantages[i]};
        one.old_logprobs = {g.old_logprobs[i]};
        one.dual_dists = {g.dual_dists[i]};

        ad::Objective surr;
        surr.value_ad = [&](ad::Tape&, std::span<const ad::Ad> th) {
            return clipped_surrogate<ad::Ad>(one, shape, th, cfg.clip_epsilon);
        };
        ad::gradient(tape, theta, surr, grad_surr);

        ad::Objective prcp;
        prcp.value_ad = [&](ad::Tape&, std::span<const ad::Ad> th) {
            return perception_sensitivity<ad::Ad>(one, shape, th, cfg.kl_cap);
        };
        ad::gradient(tape, theta, prcp, grad_prcp);

        CaseEntry entry;
        entry.advantage = g.advantages[i];
        entry.cosine = cosine(grad_surr, grad_prcp);

        const auto answer = answer_set_from_tokens(g.rollouts[i].tokens, K);
        if (entry.advantage == 0.0) {
            entry.rollout_case = RolloutCase::ZeroAdvantage;
        } else if (answer == truth) {
            // On non-conflict samples truth and prior coincide; the
            // grounded reading wins by convention.
            entry.rollout_case = entry.advantage > 0.0 ? RolloutCase::GroundedPositive
                                                       : RolloutCase::GroundedNegative;
        } else if (answer == prior) {
            entry.rollout_case = entry.advantage > 0.0 ? RolloutCase::PriorPositive
                                                       : RolloutCase::PriorNegative;
        } else {
            entry.rollout_case = RolloutCase::Neither;
        }
        report.entries.push_back(entry);
    }

    std::map<RolloutCase, double> cosine_sum;
    for (const auto& e : report.entries) {
        ++report.counts[e.rollout_case];
        cosine_sum[e.rollout_case] += e.cosine;
    }
    for (const auto& [c, n] : report.counts)
        report.mean_cosine[c] = cosine_sum[c] / static_cast<double>(n);
    return report;
}

// ---------------------------------------------------------------------------
// Lambda sweep

SweepReport lambda_sweep(const std::function<SweepInputs(std::uint64_t)>& inputs_for_seed,
                         const TrainConfig& base, std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds) {
    if (lambdas.size() < 3)
        throw InputError("lambda_sweep: need at least three lambda values");
    if (std::none_of(lambdas.begin(), lambdas.end(), [](double l) { return l == 0.0; }))
        throw InputError("lambda_sweep: the grid must include lambda = 0");

    SweepReport report;
    for (std::uint64_t seed : seeds) {
        const SweepInputs inputs = inputs_for_seed(seed);
        for (double lambda : lambdas) {
            SweepCell cell;
            cell.lambda = lambda;
            cell.seed = seed;
            try {
                TrainConfig cfg = base;
                cfg.lambda = lambda;
                cfg.seed = seed;
                const TrainResult run = train(inputs.train_data, inputs.init, cfg);
                cell.diverged = run.diverged;
                cell.eval = evaluate_policy(run.params, inputs.eval_data);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

} // namespace procau::adpo
