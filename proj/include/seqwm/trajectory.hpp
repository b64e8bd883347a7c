#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqwm/keyed_subset.hpp"
#include "seqwm/policy.hpp"

namespace seqwm {

inline constexpr const char* kFormatVersion = "seqwm/1";

enum class EmbedMethod { SeqWm, RoundIndexed, Unwatermarked };

EmbedMethod embed_method_from_string(const std::string& s);
std::string to_string(EmbedMethod m);

/// How the detector reconstructs per-step candidate sets: a single global
/// vocabulary, or the candidate list logged with each step.
enum class CandidateMode { GlobalVocabulary, PerStep };

struct TrajectoryStep {
    std::uint64_t t = 0;  // 1-based, strictly increasing
    ActionId action;
    std::vector<ActionId> candidates;    // per-step mode only
    std::vector<double> elicited_probs;  // diagnostic, may be empty
    std::vector<double> tilted_probs;    // diagnostic, may be empty
    bool watermarked = false;
    std::uint32_t n_eff = 0;  // 0 when the step carries no watermark
};

/// Attack annotation carried by corrupted trajectory files.
struct AttackDescriptor {
    std::string type;  // "delete" | "truncate" | "substitute"
    double rho = 0.0;
    std::uint64_t keep = 0;
    std::uint64_t seed = 0;
};

struct Trajectory {
    std::string format = kFormatVersion;
    CandidateMode mode = CandidateMode::GlobalVocabulary;
    EmbedMethod method = EmbedMethod::Unwatermarked;
    // Watermark parameter echo, key deliberately excluded.
    std::uint32_t w = 0, m = 0, n = 0, n_min = 0;
    double gamma = 0.0, delta = 0.0;
    PolicySpec policy;
    std::uint64_t seed = 0;
    std::vector<ActionId> vocabulary;  // global mode only
    std::vector<AttackDescriptor> attacks;
    std::vector<TrajectoryStep> steps;

    std::vector<ActionId> actions() const {
        std::vector<ActionId> out;
        out.reserve(steps.size());
        for (const auto& s : steps) out.push_back(s.action);
        return out;
    }
};

}  // namespace seqwm
