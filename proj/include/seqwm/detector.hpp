#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqwm/encoder.hpp"
#include "seqwm/keyed_subset.hpp"
#include "seqwm/trajectory.hpp"

namespace seqwm {

/// Detector-side view of a (possibly corrupted) action log.
/// Candidate sets are reconstructed either from a global vocabulary (robust
/// to deletion, the default for attack experiments) or from the candidate
/// list logged with each surviving step.
struct ObservedSequence {
    std::vector<ActionId> actions;
    std::vector<ActionId> vocabulary;                     // global mode
    std::vector<std::vector<ActionId>> step_candidates;   // per-step mode
    CandidateMode mode = CandidateMode::GlobalVocabulary;

    std::size_t length() const { return actions.size(); }
    const std::vector<ActionId>& candidates_at(std::size_t step_index_1based) const;

    static ObservedSequence from_trajectory(const Trajectory& traj);
};

/// Aggregated detection evidence.
struct ScoreResult {
    std::int64_t score = 0;            // S
    std::int64_t indicator_count = 0;  // N: scored (window|step, channel) pairs
    std::vector<std::uint32_t> per_window_hits;
};

/// Sliding-window score: for every length-w substring, count the channels
/// whose keyed subset (seeded by that substring) contains the immediately
/// following action. Position-agnostic; sequences with length <= w score 0.
ScoreResult sliding_score(const SecretKey& key, const ObservedSequence& obs,
                          const WatermarkParams& params);

/// Round-indexed baseline: the subset for step t is seeded by the absolute
/// index t (with the same channel-suffix convention), so the comparison with
/// sliding_score isolates window-vs-index seeding.
ScoreResult round_indexed_score(const SecretKey& key, const ObservedSequence& obs,
                                const WatermarkParams& params);

/// score / indicator_count; empty when no indicators were scored.
std::optional<double> hit_rate(const ScoreResult& result);

/// Fraction of scored steps whose action lies in at least one channel subset
/// (the looser per-step notion of a hit; sliding detector only).
std::optional<double> any_channel_hit_rate(const ScoreResult& result, std::uint32_t m);

/// Reference z statistic against an independent-Bernoulli null: one null
/// rate per indicator. Only a diagnostic — the indicators are dependent, so
/// this underestimates the null variance; calibrated p-values are the valid
/// test. Empty when the null variance is zero.
std::optional<double> z_score(const ScoreResult& result,
                              const std::vector<double>& p0_per_indicator);

enum class DetectorKind { Sliding, RoundIndexed };

/// Per-indicator null hit rates n_eff/A_t for the given detector, aligned
/// with the indicators sliding_score / round_indexed_score would produce.
std::vector<double> null_hit_rates(const ObservedSequence& obs, const WatermarkParams& params,
                                   DetectorKind kind);

}  // namespace seqwm
