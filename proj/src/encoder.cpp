#include "seqwm/encoder.hpp"

#include <cmath>

#include "seqwm/errors.hpp"

namespace seqwm {

void WatermarkParams::validate() const {
    if (w < 1) throw InvalidParameter("params: window length w must be >= 1");
    if (m < 1) throw InvalidParameter("params: channel count m must be >= 1");
    if (n < 1 || n_min < 1 || n_min > n)
        throw InvalidParameter("params: need 1 <= n_min <= n");
    if (gamma < 0.0) throw InvalidParameter("params: gamma must be nonnegative");
    if (delta < 0.0 || delta >= 1.0) throw InvalidParameter("params: delta must be in [0, 1)");
}

std::optional<std::uint32_t> effective_subset_size(const WatermarkParams& params,
                                                   std::size_t a_t) {
    if (a_t < 2) return std::nullopt;
    const std::uint32_t cap = std::uint32_t(a_t) - 1;
    std::uint32_t n_eff = std::min(params.n, cap);
    n_eff = std::max(n_eff, std::min(params.n_min, cap));
    return n_eff;
}

std::vector<std::vector<std::uint32_t>> guided_subsets(const WatermarkParams& params,
                                                       const std::vector<ActionId>& window,
                                                       const std::vector<ActionId>& candidates,
                                                       std::uint32_t n_eff) {
    std::vector<std::vector<std::uint32_t>> subsets;
    subsets.reserve(params.m);
    for (std::uint32_t j = 1; j <= params.m; ++j) {
        const SeedContext ctx = encode_context(window, j);
        subsets.push_back(
            sample_subset_indices(params.key, ctx, std::uint32_t(candidates.size()), n_eff));
    }
    return subsets;
}

std::uint32_t channel_score(std::uint32_t idx,
                            const std::vector<std::vector<std::uint32_t>>& subsets) {
    std::uint32_t s = 0;
    for (const auto& subset : subsets)
        for (std::uint32_t member : subset)
            if (member == idx) {
                ++s;
                break;
            }
    return s;
}

std::uint32_t channel_score(const ActionId& action,
                            const std::vector<std::vector<ActionId>>& subsets) {
    std::uint32_t s = 0;
    for (const auto& subset : subsets)
        for (const ActionId& member : subset)
            if (member == action) {
                ++s;
                break;
            }
    return s;
}

std::vector<double> tilt(const std::vector<double>& probs,
                         const std::vector<std::uint32_t>& scores, double gamma,
                         std::uint32_t m, double delta) {
    if (probs.size() != scores.size())
        throw InvalidParameter("tilt: probs and scores must be aligned");
    std::vector<double> out(probs.size());
    double z = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double q = std::max(probs[i], delta);
        out[i] = q * std::exp(gamma * double(scores[i]) / double(m));
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

namespace {

std::vector<std::uint32_t> scores_for(const std::vector<std::vector<std::uint32_t>>& subsets,
                                      std::size_t n_candidates) {
    std::vector<std::uint32_t> scores(n_candidates, 0);
    for (const auto& subset : subsets)
        for (std::uint32_t idx : subset) ++scores[idx];
    return scores;
}

// Round-indexed subsets mirror the window-seeded channel convention, so the
// two methods differ only in the seed payload.
std::vector<std::vector<std::uint32_t>> round_subsets(const WatermarkParams& params,
                                                      std::uint64_t t,
                                                      std::size_t n_candidates,
                                                      std::uint32_t n_eff) {
    std::vector<std::vector<std::uint32_t>> subsets;
    subsets.reserve(params.m);
    for (std::uint32_t j = 1; j <= params.m; ++j) {
        const SeedContext ctx = encode_round_channel(t, j);
        subsets.push_back(
            sample_subset_indices(params.key, ctx, std::uint32_t(n_candidates), n_eff));
    }
    return subsets;
}

}  // namespace

StepEncoding encode_step(const WatermarkParams& params, const std::vector<ActionId>& window,
                         const std::vector<ActionId>& candidates,
                         const std::vector<double>& probs, std::uint32_t n_eff) {
    StepEncoding enc;
    enc.n_eff = n_eff;
    enc.subsets = guided_subsets(params, window, candidates, n_eff);
    enc.scores = scores_for(enc.subsets, candidates.size());
    enc.tilted = tilt(probs, enc.scores, params.gamma, params.m, params.delta);
    return enc;
}

Trajectory encode_trajectory(const WatermarkParams& params, const PolicySpec& policy,
                             std::uint64_t horizon, Rng64& rng, const EncodeOptions& options,
                             std::vector<StepEncoding>* captured) {
    params.validate();
    policy.validate();
    if (horizon < 1) throw InvalidParameter("encode_trajectory: horizon must be >= 1");

    Trajectory traj;
    traj.mode = policy.variable_candidates ? CandidateMode::PerStep
                                           : CandidateMode::GlobalVocabulary;
    traj.method = options.method;
    traj.w = params.w;
    traj.m = params.m;
    traj.n = params.n;
    traj.n_min = params.n_min;
    traj.gamma = params.gamma;
    traj.delta = params.delta;
    traj.policy = policy;
    if (traj.mode == CandidateMode::GlobalVocabulary) traj.vocabulary = policy.vocabulary.actions;
    traj.steps.reserve(horizon);

    std::vector<ActionId> history;
    history.reserve(horizon);
    std::size_t last_index = ActionVocabulary::npos;

    for (std::uint64_t t = 1; t <= horizon; ++t) {
        ElicitedStep step = elicit_at(policy, t, last_index);

        TrajectoryStep rec;
        rec.t = t;
        const auto n_eff = effective_subset_size(params, step.candidates.size());
        const bool bootstrap = options.method == EmbedMethod::SeqWm && history.size() < params.w;
        const bool watermark =
            options.method != EmbedMethod::Unwatermarked && !bootstrap && n_eff.has_value();

        std::size_t chosen;
        if (!watermark) {
            chosen = rng.categorical(step.probs);
        } else {
            StepEncoding enc;
            if (options.method == EmbedMethod::SeqWm) {
                const std::vector<ActionId> window(history.end() - params.w, history.end());
                enc = encode_step(params, window, step.candidates, step.probs, *n_eff);
            } else {
                enc.n_eff = *n_eff;
                enc.subsets = round_subsets(params, t, step.candidates.size(), *n_eff);
                enc.scores = scores_for(enc.subsets, step.candidates.size());
                enc.tilted = tilt(step.probs, enc.scores, params.gamma, params.m, params.delta);
            }
            chosen = rng.categorical(enc.tilted);
            rec.watermarked = true;
            rec.n_eff = enc.n_eff;
            if (options.record_probs) rec.tilted_probs = enc.tilted;
            if (captured) captured->push_back(std::move(enc));
        }

        rec.action = step.candidates[chosen];
        if (traj.mode == CandidateMode::PerStep) rec.candidates = step.candidates;
        if (options.record_probs) rec.elicited_probs = std::move(step.probs);
        if (!rec.watermarked && captured) captured->push_back(StepEncoding{});

        last_index = policy.vocabulary.index_of(rec.action);
        history.push_back(rec.action);
        traj.steps.push_back(std::move(rec));
    }
    return traj;
}

Trajectory simulate_trajectory(const PolicySpec& policy, std::uint64_t horizon, Rng64& rng,
                               bool record_probs) {
    WatermarkParams params;  // default w/m/n echo; no bias on this path
    params.gamma = 0.0;
    params.delta = 0.0;
    EncodeOptions options;
    options.method = EmbedMethod::Unwatermarked;
    options.record_probs = record_probs;
    return encode_trajectory(params, policy, horizon, rng, options);
}

}  // namespace seqwm
