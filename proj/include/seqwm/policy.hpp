#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqwm/keyed_subset.hpp"
#include "seqwm/rng.hpp"

namespace seqwm {

/// Ordered action alphabet. At least two distinct actions.
struct ActionVocabulary {
    std::vector<ActionId> actions;

    std::size_t size() const { return actions.size(); }
    /// Index of `a`, or npos when unknown.
    std::size_t index_of(const ActionId& a) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

enum class PolicyKind { Uniform, DirichletRandom, MarkovOrder1 };

/// Synthetic stand-in for an agent's per-step action distribution.
///
/// uniform          — 1/A on every action.
/// dirichlet_random — a fixed Dirichlet(concentration) draw per step index,
///                    deterministic given rng_seed.
/// markov_order1    — row of transition_matrix for the last action; uniform
///                    row when the history is empty.
///
/// With variable_candidates set, each step exposes only a pseudorandom
/// subset of the vocabulary (size >= 2, vocabulary order preserved,
/// deterministic given rng_seed and step index) and the distribution is
/// renormalized over it.
struct PolicySpec {
    PolicyKind kind = PolicyKind::Uniform;
    ActionVocabulary vocabulary;
    double concentration = 1.0;
    std::vector<std::vector<double>> transition_matrix;
    std::uint64_t rng_seed = 0;
    bool variable_candidates = false;

    /// Throws InvalidParameter when the spec is internally inconsistent
    /// (vocabulary too small, non-stochastic rows, bad concentration).
    void validate() const;
};

/// One elicited step: ordered candidates with an aligned probability vector.
struct ElicitedStep {
    std::vector<ActionId> candidates;
    std::vector<double> probs;
};

/// Elicit the step distribution given the history so far. Pure function of
/// (policy, history); the step index is history.size() + 1.
ElicitedStep elicit(const PolicySpec& policy, const std::vector<ActionId>& history);

/// Fast path for generators that maintain the history themselves: `step_index`
/// is 1-based, `last_action_index` indexes the vocabulary (npos for an empty
/// history). Skips the per-call history validation of elicit().
ElicitedStep elicit_at(const PolicySpec& policy, std::size_t step_index,
                       std::size_t last_action_index);

/// Inverse-CDF draw from the elicited distribution using the run RNG.
ActionId sample_action(const ElicitedStep& step, Rng64& rng);

PolicyKind policy_kind_from_string(const std::string& s);
std::string to_string(PolicyKind kind);

/// Vocabulary of `size` synthetic actions "a0", "a1", ...
ActionVocabulary make_vocabulary(std::size_t size, const std::string& prefix = "a");

}  // namespace seqwm
