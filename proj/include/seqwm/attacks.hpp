#pragma once

#include <cstdint>
#include <vector>

#include "seqwm/detector.hpp"
#include "seqwm/rng.hpp"
#include "seqwm/trajectory.hpp"

namespace seqwm {

struct DeletionResult {
    ObservedSequence observed;
    std::vector<std::size_t> deleted_positions;  // 0-based original indices, sorted
};

/// Remove round(rho * T') positions chosen uniformly without replacement;
/// survivors keep their relative order (and, in per-step mode, their own
/// candidate sets). The deleted original indices are returned so callers can
/// verify the deterministic deletion bound.
DeletionResult delete_random(const ObservedSequence& obs, double rho, Rng64& rng);

/// Keep the first `keep` actions.
ObservedSequence truncate_sequence(const ObservedSequence& obs, std::size_t keep);

/// Replace round(rho * T') positions with uniform draws from the vocabulary
/// excluding the original action. Global-vocabulary mode only.
ObservedSequence substitute_random(const ObservedSequence& obs, double rho, Rng64& rng);

/// File-level counterparts: same position choices applied to full step
/// records (step indices renumbered from 1, attack descriptor appended).
Trajectory delete_random(const Trajectory& traj, double rho, std::uint64_t seed);
Trajectory truncate_trajectory(const Trajectory& traj, std::uint64_t keep);
Trajectory substitute_random(const Trajectory& traj, double rho, std::uint64_t seed);

}  // namespace seqwm
