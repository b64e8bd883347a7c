#include "seqwm/detector.hpp"

#include <cmath>
#include <unordered_map>

#include "seqwm/errors.hpp"

namespace seqwm {
namespace {

// Membership scorer for one (key, candidate set) pair. In global-vocabulary
// mode subsets are memoized per seed payload: repetitive sequences revisit
// the same window many times and the subset is a pure function of the seed.
class SubsetScorer {
public:
    SubsetScorer(const SecretKey& key, bool memoize) : hmac_(key), memoize_(memoize) {}

    // True iff candidate index `target` lands in the channel subset.
    bool hit(const SeedContext& ctx, std::uint32_t n_candidates, std::uint32_t n_eff,
             std::uint32_t target) {
        if (!memoize_) return contains(sample(ctx, n_candidates, n_eff), target);
        auto [it, inserted] = memo_.try_emplace(ctx.payload);
        if (inserted) it->second = sample(ctx, n_candidates, n_eff);
        return contains(it->second, target);
    }

private:
    std::vector<std::uint32_t> sample(const SeedContext& ctx, std::uint32_t n_candidates,
                                      std::uint32_t n_eff) const {
        // Same mechanics as sample_subset_indices, on the cached-pad HMAC.
        std::vector<std::uint32_t> arr(n_candidates);
        for (std::uint32_t i = 0; i < n_candidates; ++i) arr[i] = i;
        std::string msg = ctx.payload;
        msg += '\0';
        msg.append(4, '\0');
        std::array<std::uint8_t, 32> block{};
        std::uint32_t counter = 0;
        int pos = 4;
        auto next_chunk = [&]() {
            if (pos == 4) {
                const std::size_t nb = msg.size();
                msg[nb - 4] = char(counter >> 24);
                msg[nb - 3] = char(counter >> 16 & 0xff);
                msg[nb - 2] = char(counter >> 8 & 0xff);
                msg[nb - 1] = char(counter & 0xff);
                block = hmac_.mac(reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size());
                ++counter;
                pos = 0;
            }
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i) v = v << 8 | block[8 * pos + i];
            ++pos;
            return v;
        };
        for (std::uint32_t i = 0; i < n_eff; ++i) {
            const std::uint64_t r = n_candidates - i;
            const std::uint64_t mod = (~std::uint64_t{0} % r + 1) % r;
            std::uint64_t v = next_chunk();
            while (mod != 0 && v >= std::uint64_t{0} - mod) v = next_chunk();
            std::swap(arr[i], arr[i + std::uint32_t(v % r)]);
        }
        arr.resize(n_eff);
        return arr;
    }

    static bool contains(const std::vector<std::uint32_t>& subset, std::uint32_t target) {
        for (std::uint32_t v : subset)
            if (v == target) return true;
        return false;
    }

    detail::HmacSha256 hmac_;
    bool memoize_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> memo_;
};

std::uint32_t index_in(const std::vector<ActionId>& candidates, const ActionId& a,
                       std::size_t step, const char* where) {
    for (std::uint32_t i = 0; i < candidates.size(); ++i)
        if (candidates[i] == a) return i;
    throw InvalidParameter(std::string(where) + ": action at step " + std::to_string(step) +
                           " not present in its candidate set: " + a);
}

}  // namespace

const std::vector<ActionId>& ObservedSequence::candidates_at(std::size_t step) const {
    if (mode == CandidateMode::GlobalVocabulary) return vocabulary;
    if (step < 1 || step > step_candidates.size())
        throw ParseError(ParseError::Kind::MissingCandidates, step,
                         "no logged candidate set for scored step");
    return step_candidates[step - 1];
}

ObservedSequence ObservedSequence::from_trajectory(const Trajectory& traj) {
    ObservedSequence obs;
    obs.actions = traj.actions();
    obs.mode = traj.mode;
    if (traj.mode == CandidateMode::GlobalVocabulary) {
        obs.vocabulary = traj.vocabulary;
    } else {
        obs.step_candidates.reserve(traj.steps.size());
        for (const auto& s : traj.steps) obs.step_candidates.push_back(s.candidates);
    }
    return obs;
}

ScoreResult sliding_score(const SecretKey& key, const ObservedSequence& obs,
                          const WatermarkParams& params) {
    params.validate();
    ScoreResult result;
    const std::size_t t_prime = obs.length();
    if (t_prime <= params.w) return result;

    const std::size_t n_windows = t_prime - params.w;
    result.indicator_count = std::int64_t(n_windows) * params.m;
    result.per_window_hits.resize(n_windows, 0);

    SubsetScorer scorer(key, obs.mode == CandidateMode::GlobalVocabulary);
    std::vector<ActionId> window(params.w);
    for (std::size_t i = 1; i <= n_windows; ++i) {
        const std::size_t next_step = i + params.w;  // 1-based step being scored
        const std::vector<ActionId>& cands = obs.candidates_at(next_step);
        const auto n_eff = effective_subset_size(params, cands.size());
        if (!n_eff) continue;  // unwatermarkable step: all m indicators stay 0
        const std::uint32_t target =
            index_in(cands, obs.actions[next_step - 1], next_step, "sliding_score");
        for (std::uint32_t k = 0; k < params.w; ++k) window[k] = obs.actions[i - 1 + k];
        std::uint32_t hits = 0;
        for (std::uint32_t j = 1; j <= params.m; ++j) {
            const SeedContext ctx = encode_context(window, j);
            if (scorer.hit(ctx, std::uint32_t(cands.size()), *n_eff, target)) ++hits;
        }
        result.per_window_hits[i - 1] = hits;
        result.score += hits;
    }
    return result;
}

ScoreResult round_indexed_score(const SecretKey& key, const ObservedSequence& obs,
                                const WatermarkParams& params) {
    params.validate();
    ScoreResult result;
    const std::size_t t_prime = obs.length();
    result.indicator_count = std::int64_t(t_prime) * params.m;
    result.per_window_hits.resize(t_prime, 0);

    // Round payloads are distinct per step, so memoization cannot help here.
    SubsetScorer scorer(key, false);
    for (std::size_t t = 1; t <= t_prime; ++t) {
        const std::vector<ActionId>& cands = obs.candidates_at(t);
        const auto n_eff = effective_subset_size(params, cands.size());
        if (!n_eff) continue;
        const std::uint32_t target =
            index_in(cands, obs.actions[t - 1], t, "round_indexed_score");
        std::uint32_t hits = 0;
        for (std::uint32_t j = 1; j <= params.m; ++j) {
            const SeedContext ctx = encode_round_channel(t, j);
            if (scorer.hit(ctx, std::uint32_t(cands.size()), *n_eff, target)) ++hits;
        }
        result.per_window_hits[t - 1] = hits;
        result.score += hits;
    }
    return result;
}

std::optional<double> hit_rate(const ScoreResult& result) {
    if (result.indicator_count == 0) return std::nullopt;
    return double(result.score) / double(result.indicator_count);
}

std::optional<double> any_channel_hit_rate(const ScoreResult& result, std::uint32_t m) {
    if (result.per_window_hits.empty() || m == 0) return std::nullopt;
    std::size_t hit_windows = 0;
    for (std::uint32_t h : result.per_window_hits)
        if (h > 0) ++hit_windows;
    return double(hit_windows) / double(result.per_window_hits.size());
}

std::optional<double> z_score(const ScoreResult& result,
                              const std::vector<double>& p0_per_indicator) {
    if (std::size_t(result.indicator_count) != p0_per_indicator.size())
        throw InvalidParameter("z_score: need one null rate per indicator");
    double mean = 0.0, var = 0.0;
    for (double p0 : p0_per_indicator) {
        mean += p0;
        var += p0 * (1.0 - p0);
    }
    if (var <= 0.0) return std::nullopt;
    return (double(result.score) - mean) / std::sqrt(var);
}

std::vector<double> null_hit_rates(const ObservedSequence& obs, const WatermarkParams& params,
                                   DetectorKind kind) {
    std::vector<double> rates;
    const std::size_t t_prime = obs.length();
    const std::size_t first_step = kind == DetectorKind::Sliding ? params.w + 1 : 1;
    if (kind == DetectorKind::Sliding && t_prime <= params.w) return rates;
    for (std::size_t t = first_step; t <= t_prime; ++t) {
        const std::size_t a_t = obs.candidates_at(t).size();
        const auto n_eff = effective_subset_size(params, a_t);
        const double p0 = n_eff ? double(*n_eff) / double(a_t) : 0.0;
        rates.insert(rates.end(), params.m, p0);
    }
    return rates;
}

}  // namespace seqwm
