#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqwm/keyed_subset.hpp"
#include "seqwm/policy.hpp"
#include "seqwm/rng.hpp"
#include "seqwm/trajectory.hpp"

namespace seqwm {

/// Watermark configuration plus the secret key.
struct WatermarkParams {
    std::uint32_t w = 3;      // context window length
    std::uint32_t m = 8;      // channel count
    std::uint32_t n = 3;      // target guided-subset size
    std::uint32_t n_min = 2;  // minimum subset size after clipping
    double gamma = 2.0;       // bias strength
    double delta = 0.2;       // probability floor applied before the tilt
    SecretKey key;

    void validate() const;
};

/// Everything the encoder derived for one watermarked step.
struct StepEncoding {
    std::vector<std::vector<std::uint32_t>> subsets;  // m subsets, candidate indices
    std::vector<std::uint32_t> scores;                // per-candidate channel counts
    std::vector<double> tilted;                       // watermarked distribution
    std::uint32_t n_eff = 0;
};

/// Subset size actually used at a step with candidate-set size a_t:
/// clip n to a_t - 1, then lift to min(n_min, a_t - 1). Returns nullopt when
/// a_t < 2, i.e. the step cannot carry a watermark.
std::optional<std::uint32_t> effective_subset_size(const WatermarkParams& params,
                                                   std::size_t a_t);

/// The m guided subsets for a window, as indices into `candidates`.
/// Channel seeds are encode_context(window, j) for j = 1..m.
std::vector<std::vector<std::uint32_t>> guided_subsets(const WatermarkParams& params,
                                                       const std::vector<ActionId>& window,
                                                       const std::vector<ActionId>& candidates,
                                                       std::uint32_t n_eff);

/// Number of channels whose subset contains candidate index `idx`.
std::uint32_t channel_score(std::uint32_t idx,
                            const std::vector<std::vector<std::uint32_t>>& subsets);

/// Same count over subsets of action ids.
std::uint32_t channel_score(const ActionId& action,
                            const std::vector<std::vector<ActionId>>& subsets);

/// Exponential tilt with floor: q_i = max(p_i, delta),
/// out_i ∝ q_i * exp(gamma * score_i / m), renormalized once at the end.
/// gamma = 0 and delta = 0 give back the input exactly.
std::vector<double> tilt(const std::vector<double>& probs,
                         const std::vector<std::uint32_t>& scores, double gamma,
                         std::uint32_t m, double delta);

/// Full per-step derivation for a window-seeded step.
StepEncoding encode_step(const WatermarkParams& params, const std::vector<ActionId>& window,
                         const std::vector<ActionId>& candidates,
                         const std::vector<double>& probs, std::uint32_t n_eff);

/// Trajectory generation (window-seeded, round-indexed, or no watermark).
///
/// Window-seeded runs sample the first w steps from the unmodified elicited
/// distribution; later steps tilt toward the guided subsets of the last w
/// actions. Round-indexed runs tilt every step toward subsets seeded by the
/// absolute step index. Steps whose candidate set is too small to watermark
/// pass through unmodified and are flagged.
struct EncodeOptions {
    EmbedMethod method = EmbedMethod::SeqWm;
    bool record_probs = true;  // keep elicited/tilted vectors in the steps
};

Trajectory encode_trajectory(const WatermarkParams& params, const PolicySpec& policy,
                             std::uint64_t horizon, Rng64& rng,
                             const EncodeOptions& options = {},
                             std::vector<StepEncoding>* captured = nullptr);

/// Unwatermarked run from the policy alone (bootstrap sampling at every step).
Trajectory simulate_trajectory(const PolicySpec& policy, std::uint64_t horizon, Rng64& rng,
                               bool record_probs = true);

}  // namespace seqwm
