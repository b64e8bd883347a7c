#include "seqwm/policy.hpp"

#include <cmath>

#include "seqwm/errors.hpp"

namespace seqwm {
namespace {

constexpr double kRowSumTolerance = 1e-9;

// Per-step generator stream, decoupled from the run RNG so that elicit stays
// a pure function of (policy, history).
Rng64 step_rng(const PolicySpec& policy, std::size_t step_index) {
    return Rng64(mix_seed(policy.rng_seed, step_index));
}

std::vector<double> full_vocab_probs(const PolicySpec& policy, std::size_t step_index,
                                     std::size_t last_action_index) {
    const std::size_t A = policy.vocabulary.size();
    switch (policy.kind) {
        case PolicyKind::Uniform:
            return std::vector<double>(A, 1.0 / double(A));
        case PolicyKind::DirichletRandom: {
            Rng64 rng = step_rng(policy, step_index);
            std::vector<double> probs(A);
            double total = 0.0;
            for (std::size_t i = 0; i < A; ++i) {
                probs[i] = rng.gamma(policy.concentration);
                total += probs[i];
            }
            for (double& p : probs) p /= total;
            return probs;
        }
        case PolicyKind::MarkovOrder1: {
            if (last_action_index == ActionVocabulary::npos)
                return std::vector<double>(A, 1.0 / double(A));
            return policy.transition_matrix[last_action_index];
        }
    }
    throw InvalidParameter("elicit: unknown policy kind");
}

}  // namespace

std::size_t ActionVocabulary::index_of(const ActionId& a) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i] == a) return i;
    return npos;
}

void PolicySpec::validate() const {
    const std::size_t A = vocabulary.size();
    if (A < 2) throw InvalidParameter("policy: vocabulary must hold at least 2 actions");
    for (std::size_t i = 0; i < A; ++i)
        for (std::size_t j = i + 1; j < A; ++j)
            if (vocabulary.actions[i] == vocabulary.actions[j])
                throw InvalidParameter("policy: duplicate action " + vocabulary.actions[i]);
    if (kind == PolicyKind::DirichletRandom && !(concentration > 0.0))
        throw InvalidParameter("policy: dirichlet concentration must be positive");
    if (kind == PolicyKind::MarkovOrder1) {
        if (transition_matrix.size() != A)
            throw InvalidParameter("policy: transition matrix must have one row per action");
        for (const auto& row : transition_matrix) {
            if (row.size() != A)
                throw InvalidParameter("policy: transition matrix rows must have length A");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw InvalidParameter("policy: negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw InvalidParameter("policy: transition row does not sum to 1");
        }
    }
}

ElicitedStep elicit_at(const PolicySpec& policy, std::size_t step_index,
                       std::size_t last_action_index) {
    std::vector<double> probs = full_vocab_probs(policy, step_index, last_action_index);

    ElicitedStep step;
    if (!policy.variable_candidates) {
        step.candidates = policy.vocabulary.actions;
        step.probs = std::move(probs);
        return step;
    }

    // Pseudorandom candidate subset of size in [2, A], vocabulary order kept.
    const std::size_t A = policy.vocabulary.size();
    Rng64 rng = step_rng(policy, step_index | (std::uint64_t{1} << 62));
    const std::size_t a_t = 2 + std::size_t(rng.uniform_below(std::uint64_t(A - 1)));
    const std::vector<std::size_t> chosen = rng.sample_without_replacement(A, a_t);
    double total = 0.0;
    for (std::size_t i : chosen) total += probs[i];
    for (std::size_t i : chosen) {
        step.candidates.push_back(policy.vocabulary.actions[i]);
        // Degenerate rows can put zero mass on the whole subset; fall back to
        // uniform over the subset rather than emitting NaNs.
        step.probs.push_back(total > 0.0 ? probs[i] / total : 1.0 / double(a_t));
    }
    return step;
}

ElicitedStep elicit(const PolicySpec& policy, const std::vector<ActionId>& history) {
    for (const ActionId& a : history)
        if (policy.vocabulary.index_of(a) == ActionVocabulary::npos)
            throw InvalidParameter("elicit: history action not in vocabulary: " + a);
    const std::size_t last = history.empty() ? ActionVocabulary::npos
                                             : policy.vocabulary.index_of(history.back());
    return elicit_at(policy, history.size() + 1, last);
}

ActionId sample_action(const ElicitedStep& step, Rng64& rng) {
    if (step.candidates.empty()) throw InvalidParameter("sample_action: empty candidate set");
    return step.candidates[rng.categorical(step.probs)];
}

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "uniform") return PolicyKind::Uniform;
    if (s == "dirichlet_random") return PolicyKind::DirichletRandom;
    if (s == "markov_order1") return PolicyKind::MarkovOrder1;
    throw InvalidParameter("unknown policy kind: " + s);
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Uniform: return "uniform";
        case PolicyKind::DirichletRandom: return "dirichlet_random";
        case PolicyKind::MarkovOrder1: return "markov_order1";
    }
    return "unknown";
}

ActionVocabulary make_vocabulary(std::size_t size, const std::string& prefix) {
    ActionVocabulary vocab;
    vocab.actions.reserve(size);
    for (std::size_t i = 0; i < size; ++i) vocab.actions.push_back(prefix + std::to_string(i));
    return vocab;
}

}  // namespace seqwm
