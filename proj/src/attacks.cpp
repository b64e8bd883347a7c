#include "seqwm/attacks.hpp"

#include <cmath>

#include "seqwm/errors.hpp"

namespace seqwm {
namespace {

std::vector<std::size_t> pick_positions(std::size_t length, double rho, Rng64& rng) {
    if (rho < 0.0 || rho > 1.0) throw InvalidParameter("attack: rho must lie in [0, 1]");
    const auto d = std::size_t(std::llround(rho * double(length)));
    return rng.sample_without_replacement(length, d);
}

// Marks positions for O(1) membership while preserving order on rebuild.
std::vector<bool> position_mask(std::size_t length, const std::vector<std::size_t>& positions) {
    std::vector<bool> mask(length, false);
    for (std::size_t p : positions) mask[p] = true;
    return mask;
}

}  // namespace

DeletionResult delete_random(const ObservedSequence& obs, double rho, Rng64& rng) {
    DeletionResult result;
    result.deleted_positions = pick_positions(obs.length(), rho, rng);
    const std::vector<bool> deleted = position_mask(obs.length(), result.deleted_positions);

    result.observed.mode = obs.mode;
    result.observed.vocabulary = obs.vocabulary;
    for (std::size_t i = 0; i < obs.length(); ++i) {
        if (deleted[i]) continue;
        result.observed.actions.push_back(obs.actions[i]);
        if (obs.mode == CandidateMode::PerStep)
            result.observed.step_candidates.push_back(obs.step_candidates[i]);
    }
    return result;
}

ObservedSequence truncate_sequence(const ObservedSequence& obs, std::size_t keep) {
    if (keep > obs.length())
        throw InvalidParameter("truncate: keep exceeds the sequence length");
    ObservedSequence out;
    out.mode = obs.mode;
    out.vocabulary = obs.vocabulary;
    out.actions.assign(obs.actions.begin(), obs.actions.begin() + std::ptrdiff_t(keep));
    if (obs.mode == CandidateMode::PerStep)
        out.step_candidates.assign(obs.step_candidates.begin(),
                                   obs.step_candidates.begin() + std::ptrdiff_t(keep));
    return out;
}

ObservedSequence substitute_random(const ObservedSequence& obs, double rho, Rng64& rng) {
    if (obs.mode != CandidateMode::GlobalVocabulary)
        throw InvalidParameter("substitute: only supported in global-vocabulary mode");
    if (obs.vocabulary.size() < 2)
        throw InvalidParameter("substitute: vocabulary must hold at least 2 actions");
    ObservedSequence out = obs;
    for (std::size_t p : pick_positions(obs.length(), rho, rng)) {
        // Uniform over the vocabulary minus the original action.
        const std::size_t orig = [&] {
            for (std::size_t i = 0; i < obs.vocabulary.size(); ++i)
                if (obs.vocabulary[i] == obs.actions[p]) return i;
            throw InvalidParameter("substitute: action not in vocabulary: " + obs.actions[p]);
        }();
        std::size_t pick = std::size_t(rng.uniform_below(obs.vocabulary.size() - 1));
        if (pick >= orig) ++pick;
        out.actions[p] = obs.vocabulary[pick];
    }
    return out;
}

namespace {

Trajectory rebuild_steps(const Trajectory& traj, const std::vector<bool>& keep_mask) {
    Trajectory out = traj;
    out.steps.clear();
    std::uint64_t t = 1;
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        if (!keep_mask[i]) continue;
        TrajectoryStep step = traj.steps[i];
        step.t = t++;
        out.steps.push_back(std::move(step));
    }
    return out;
}

}  // namespace

Trajectory delete_random(const Trajectory& traj, double rho, std::uint64_t seed) {
    Rng64 rng(seed);
    const auto positions = pick_positions(traj.steps.size(), rho, rng);
    std::vector<bool> keep(traj.steps.size(), true);
    for (std::size_t p : positions) keep[p] = false;
    Trajectory out = rebuild_steps(traj, keep);
    out.attacks.push_back({"delete", rho, 0, seed});
    return out;
}

Trajectory truncate_trajectory(const Trajectory& traj, std::uint64_t keep) {
    if (keep > traj.steps.size())
        throw InvalidParameter("truncate: keep exceeds the trajectory length");
    std::vector<bool> mask(traj.steps.size(), false);
    for (std::size_t i = 0; i < keep; ++i) mask[i] = true;
    Trajectory out = rebuild_steps(traj, mask);
    out.attacks.push_back({"truncate", 0.0, keep, 0});
    return out;
}

Trajectory substitute_random(const Trajectory& traj, double rho, std::uint64_t seed) {
    if (traj.mode != CandidateMode::GlobalVocabulary)
        throw InvalidParameter("substitute: only supported in global-vocabulary mode");
    ObservedSequence obs = ObservedSequence::from_trajectory(traj);
    Rng64 rng(seed);
    const ObservedSequence subst = substitute_random(obs, rho, rng);
    Trajectory out = traj;
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
        if (out.steps[i].action == subst.actions[i]) continue;
        out.steps[i].action = subst.actions[i];
        // The logged distributions no longer describe the replaced action.
        out.steps[i].elicited_probs.clear();
        out.steps[i].tilted_probs.clear();
        out.steps[i].watermarked = false;
    }
    out.attacks.push_back({"substitute", rho, 0, seed});
    return out;
}

}  // namespace seqwm
