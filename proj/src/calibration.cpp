#include "seqwm/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqwm/errors.hpp"

namespace seqwm {
namespace {

SecretKey random_key(Rng64& rng) {
    SecretKey key;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t v = rng.next_u64();
        for (int b = 0; b < 8; ++b) key.bytes[8 * i + b] = std::uint8_t(v >> (56 - 8 * b));
    }
    return key;
}

double quantile_sorted(const std::vector<std::int64_t>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * double(sorted.size() - 1);
    const std::size_t lo = std::size_t(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - double(lo);
    return double(sorted[lo]) * (1.0 - frac) + double(sorted[hi]) * frac;
}

}  // namespace

ScoreFn sliding_score_fn() {
    return [](const SecretKey& k, const ObservedSequence& o, const WatermarkParams& p) {
        return sliding_score(k, o, p);
    };
}

ScoreFn round_indexed_score_fn() {
    return [](const SecretKey& k, const ObservedSequence& o, const WatermarkParams& p) {
        return round_indexed_score(k, o, p);
    };
}

double p_value(std::int64_t s_true, const std::vector<std::int64_t>& null_scores) {
    if (null_scores.empty()) throw InvalidParameter("p_value: need at least one null score");
    std::size_t geq = 0;
    for (std::int64_t s : null_scores)
        if (s >= s_true) ++geq;
    return double(1 + geq) / double(null_scores.size() + 1);
}

std::vector<std::int64_t> score_under_keys_serial(const std::vector<SecretKey>& keys,
                                                  const ObservedSequence& obs,
                                                  const WatermarkParams& params,
                                                  const ScoreFn& score) {
    std::vector<std::int64_t> out(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) out[i] = score(keys[i], obs, params).score;
    return out;
}

std::vector<std::int64_t> score_under_keys(const std::vector<SecretKey>& keys,
                                           const ObservedSequence& obs,
                                           const WatermarkParams& params, const ScoreFn& score,
                                           int jobs) {
    std::vector<std::int64_t> out(keys.size());
#ifdef _OPENMP
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < std::int64_t(keys.size()); ++i)
        out[std::size_t(i)] = score(keys[std::size_t(i)], obs, params).score;
#else
    (void)jobs;
    out = score_under_keys_serial(keys, obs, params, score);
#endif
    return out;
}

std::vector<SecretKey> draw_wrong_keys(const SecretKey& key_true, int M, Rng64& rng) {
    if (M < 1) throw InvalidParameter("calibrate: M must be >= 1");
    std::vector<SecretKey> keys;
    keys.reserve(std::size_t(M));
    while (keys.size() < std::size_t(M)) {
        SecretKey k = random_key(rng);
        if (k == key_true) continue;
        keys.push_back(k);
    }
    return keys;
}

DetectionReport calibrate(const SecretKey& key_true, const ObservedSequence& obs,
                          const WatermarkParams& params, const CalibrationOptions& options,
                          const ScoreFn& score, const std::vector<double>* p0_per_indicator) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw InvalidParameter("calibrate: alpha must lie in (0, 1)");
    const auto t0 = std::chrono::steady_clock::now();

    Rng64 rng(options.seed);
    const std::vector<SecretKey> wrong = draw_wrong_keys(key_true, options.M, rng);

    const ScoreResult true_result = score(key_true, obs, params);
    const std::vector<std::int64_t> nulls =
        score_under_keys(wrong, obs, params, score, options.jobs);

    DetectionReport report;
    report.s_true = true_result.score;
    report.null_scores = nulls;
    report.p_value = p_value(report.s_true, nulls);
    report.decision = report.p_value < options.alpha;
    report.M = options.M;
    report.alpha = options.alpha;
    report.w = params.w;
    report.m = params.m;
    report.n = params.n;
    report.n_min = params.n_min;
    report.gamma = params.gamma;
    report.delta = params.delta;

    if (const auto hr = hit_rate(true_result)) {
        report.hit_rate = *hr;
        report.hit_rate_defined = true;
    }
    if (p0_per_indicator) {
        if (const auto z = z_score(true_result, *p0_per_indicator)) {
            report.z_reference = *z;
            report.z_reference_defined = true;
        }
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string DetectionReport::to_json(std::size_t null_scores_inline_limit) const {
    nlohmann::json j;
    j["s_true"] = s_true;
    j["p_value"] = p_value;
    j["decision"] = decision;
    j["M"] = M;
    j["alpha"] = alpha;
    if (z_reference_defined) j["z_reference"] = z_reference;
    if (hit_rate_defined) j["hit_rate"] = hit_rate;
    j["params"] = {{"w", w},         {"m", m},         {"n", n},
                   {"n_min", n_min}, {"gamma", gamma}, {"delta", delta}};
    j["wall_time_seconds"] = wall_time_seconds;

    std::vector<std::int64_t> sorted = null_scores;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (std::int64_t s : sorted) mean += double(s);
    mean = sorted.empty() ? 0.0 : mean / double(sorted.size());
    double var = 0.0;
    for (std::int64_t s : sorted) var += (double(s) - mean) * (double(s) - mean);
    var = sorted.size() > 1 ? var / double(sorted.size() - 1) : 0.0;
    j["null_summary"] = {
        {"min", sorted.empty() ? 0 : sorted.front()},
        {"q25", quantile_sorted(sorted, 0.25)},
        {"median", quantile_sorted(sorted, 0.5)},
        {"q75", quantile_sorted(sorted, 0.75)},
        {"max", sorted.empty() ? 0 : sorted.back()},
        {"mean", mean},
        {"sd", std::sqrt(var)},
    };
    if (null_scores.size() <= null_scores_inline_limit) j["null_scores"] = null_scores;

    return j.dump(2);
}

RankUniformityReport rank_uniformity_check(const ObsGenerator& obs_generator,
                                           const WatermarkParams& params, std::uint64_t trials,
                                           int M, double significance, std::uint64_t seed,
                                           const ScoreFn& score) {
    RankUniformityReport report;
    report.trials = trials;
    report.rank_counts.assign(std::size_t(M) + 1, 0);

    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        Rng64 rng(mix_seed(seed, trial));
        const SecretKey key_true = random_key(rng);
        const ObservedSequence obs = obs_generator(mix_seed(seed ^ 0x5eedULL, trial), key_true);
        const std::vector<SecretKey> wrong = draw_wrong_keys(key_true, M, rng);
        const std::int64_t s_true = score(key_true, obs, params).score;
        const std::vector<std::int64_t> nulls = score_under_keys(wrong, obs, params, score);
        std::uint64_t above = 0, ties = 0;
        for (std::int64_t s : nulls) {
            if (s > s_true) ++above;
            else if (s == s_true) ++ties;
        }
        // Uniform tie-breaking makes the rank exactly uniform under the null.
        const std::uint64_t rank = 1 + above + rng.uniform_below(ties + 1);
        ++report.rank_counts[std::size_t(rank) - 1];
    }

    const double expected = double(trials) / double(M + 1);
    for (std::uint64_t c : report.rank_counts) {
        const double d = double(c) - expected;
        report.chi_square += d * d / expected;
    }
    const boost::math::chi_squared_distribution<double> dist{double(M)};
    report.critical_value = boost::math::quantile(dist, 1.0 - significance);
    report.uniform = report.chi_square <= report.critical_value;
    return report;
}

}  // namespace seqwm
