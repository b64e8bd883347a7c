#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqwm/detector.hpp"
#include "seqwm/rng.hpp"

namespace seqwm {

/// Any statistic with the sliding-score signature can be calibrated; the
/// validity argument never looks inside the score function.
using ScoreFn = std::function<ScoreResult(const SecretKey&, const ObservedSequence&,
                                          const WatermarkParams&)>;

ScoreFn sliding_score_fn();
ScoreFn round_indexed_score_fn();

struct CalibrationOptions {
    int M = 1000;            // wrong-key trials
    double alpha = 0.01;     // decision level
    std::uint64_t seed = 1;  // wrong-key draw seed
    int jobs = 0;            // 0: all available threads; 1: serial reference
};

/// Detection outcome: true-key score, the wrong-key empirical null, and the
/// rank-based p-value (ties count against the watermark).
struct DetectionReport {
    std::int64_t s_true = 0;
    std::vector<std::int64_t> null_scores;
    double p_value = 1.0;
    double z_reference = 0.0;
    bool z_reference_defined = false;
    double hit_rate = 0.0;
    bool hit_rate_defined = false;
    bool decision = false;
    int M = 0;
    double alpha = 0.0;
    // Parameter echo, key excluded.
    std::uint32_t w = 0, m = 0, n = 0, n_min = 0;
    double gamma = 0.0, delta = 0.0;
    double wall_time_seconds = 0.0;

    std::string to_json(std::size_t null_scores_inline_limit = 1000) const;
};

/// Empirical p-value of Algorithm-style random-key calibration:
/// (1 + #{r : null_scores[r] >= s_true}) / (len + 1).
double p_value(std::int64_t s_true, const std::vector<std::int64_t>& null_scores);

/// Score the observation under every key. The parallel kernel and the serial
/// reference produce identical vectors; the reference exists so tests and the
/// benchmark can pin the kernel against it.
std::vector<std::int64_t> score_under_keys_serial(const std::vector<SecretKey>& keys,
                                                  const ObservedSequence& obs,
                                                  const WatermarkParams& params,
                                                  const ScoreFn& score);
std::vector<std::int64_t> score_under_keys(const std::vector<SecretKey>& keys,
                                           const ObservedSequence& obs,
                                           const WatermarkParams& params, const ScoreFn& score,
                                           int jobs = 0);

/// M wrong keys drawn uniformly from the 256-bit key space (resampled on the
/// vanishing chance of colliding with the true key).
std::vector<SecretKey> draw_wrong_keys(const SecretKey& key_true, int M, Rng64& rng);

/// Random-key calibrated detection: scores the observation under the true
/// key and M wrong keys, reports the empirical p-value and the reference
/// z/hit-rate diagnostics. The wrong-key evaluations run in parallel; the
/// report is independent of the job count.
DetectionReport calibrate(const SecretKey& key_true, const ObservedSequence& obs,
                          const WatermarkParams& params, const CalibrationOptions& options,
                          const ScoreFn& score = sliding_score_fn(),
                          const std::vector<double>* p0_per_indicator = nullptr);

/// Diagnostic for the exchangeability argument: the rank of the true-key
/// score among the wrong-key scores is uniform under the null. Ties are
/// broken uniformly at random so the rank is exactly uniform when the
/// generator is null. Chi-square goodness of fit at the given significance.
struct RankUniformityReport {
    std::vector<std::uint64_t> rank_counts;  // size M+1
    double chi_square = 0.0;
    double critical_value = 0.0;
    bool uniform = false;
    std::uint64_t trials = 0;
};

/// The generator receives (trial seed, the trial's true key); null
/// generators ignore the key, alternative-direction checks watermark with it.
using ObsGenerator = std::function<ObservedSequence(std::uint64_t, const SecretKey&)>;

RankUniformityReport rank_uniformity_check(const ObsGenerator& obs_generator,
                                           const WatermarkParams& params, std::uint64_t trials,
                                           int M, double significance, std::uint64_t seed,
                                           const ScoreFn& score = sliding_score_fn());

}  // namespace seqwm
