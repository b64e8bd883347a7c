#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "seqwm/detector.hpp"
#include "seqwm/trajectory.hpp"

namespace seqwm {

/// Line-delimited UTF-8 trajectory format "seqwm/1": a JSON header line with
/// the run metadata (parameter echo without the key, policy, mode, global
/// vocabulary, attack history) followed by one JSON step record per line.
/// The stored candidate order is authoritative for subset sampling and is
/// never reordered.
void save_trajectory(const Trajectory& traj, const std::string& path);

struct LoadedTrajectory {
    Trajectory trajectory;
    ObservedSequence observed;
};

/// Parse a trajectory file. Failures throw ParseError with the offending
/// line: unknown format version, malformed record, non-monotone step index,
/// action missing from its candidate set, missing candidates in per-step mode.
LoadedTrajectory load_trajectory(const std::string& path);

/// Watermark parameters a detector should use for a loaded file (the header
/// echo plus the supplied key).
WatermarkParams params_from_trajectory(const Trajectory& traj, const SecretKey& key);

/// Key files: 64 lowercase hex characters and a trailing newline.
SecretKey generate_key();                      // OS entropy
SecretKey generate_key(Rng64& rng);            // seeded (tests, sweeps)
void save_key(const SecretKey& key, const std::string& path);
SecretKey load_key(const std::string& path);

// JSON helpers shared by the file format and the config/CLI layers.
nlohmann::json policy_to_json(const PolicySpec& policy);
PolicySpec policy_from_json(const nlohmann::json& j);

}  // namespace seqwm
