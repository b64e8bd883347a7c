#include "seqwm/trajectory_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "seqwm/errors.hpp"

namespace seqwm {

using nlohmann::json;

namespace {

json step_to_json(const TrajectoryStep& step, CandidateMode mode) {
    json j;
    j["t"] = step.t;
    j["action"] = step.action;
    j["watermarked"] = step.watermarked;
    j["n_eff"] = step.n_eff;
    if (mode == CandidateMode::PerStep) j["candidates"] = step.candidates;
    if (!step.elicited_probs.empty()) j["elicited_probs"] = step.elicited_probs;
    if (!step.tilted_probs.empty()) j["tilted_probs"] = step.tilted_probs;
    return j;
}

json header_to_json(const Trajectory& traj) {
    json j;
    j["format"] = traj.format;
    j["mode"] = traj.mode == CandidateMode::PerStep ? "per_step" : "global";
    j["method"] = to_string(traj.method);
    j["params"] = {{"w", traj.w},         {"m", traj.m},         {"n", traj.n},
                   {"n_min", traj.n_min}, {"gamma", traj.gamma}, {"delta", traj.delta}};
    j["policy"] = policy_to_json(traj.policy);
    j["seed"] = traj.seed;
    if (traj.mode == CandidateMode::GlobalVocabulary) j["vocabulary"] = traj.vocabulary;
    if (!traj.attacks.empty()) {
        json attacks = json::array();
        for (const auto& a : traj.attacks)
            attacks.push_back({{"type", a.type}, {"rho", a.rho}, {"keep", a.keep},
                               {"seed", a.seed}});
        j["attacks"] = attacks;
    }
    return j;
}

json parse_line(const std::string& line, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(ParseError::Kind::MalformedRecord, lineno, "record is not a JSON object");
    return j;
}

template <typename T>
T require_field(const json& j, const char* name, std::size_t lineno) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ParseError(ParseError::Kind::MalformedRecord, lineno,
                         std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(ParseError::Kind::MalformedRecord, lineno,
                         std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace

json policy_to_json(const PolicySpec& policy) {
    json j;
    j["kind"] = to_string(policy.kind);
    j["vocabulary"] = policy.vocabulary.actions;
    j["rng_seed"] = policy.rng_seed;
    j["variable_candidates"] = policy.variable_candidates;
    if (policy.kind == PolicyKind::DirichletRandom) j["concentration"] = policy.concentration;
    if (policy.kind == PolicyKind::MarkovOrder1) j["transition_matrix"] = policy.transition_matrix;
    return j;
}

PolicySpec policy_from_json(const json& j) {
    PolicySpec policy;
    policy.kind = policy_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("vocabulary") && j["vocabulary"].is_array()) {
        policy.vocabulary.actions = j["vocabulary"].get<std::vector<ActionId>>();
    } else if (j.contains("vocabulary_size")) {
        policy.vocabulary = make_vocabulary(j["vocabulary_size"].get<std::size_t>());
    } else {
        throw InvalidParameter("policy config: need 'vocabulary' or 'vocabulary_size'");
    }
    policy.rng_seed = j.value("rng_seed", std::uint64_t{0});
    policy.variable_candidates = j.value("variable_candidates", false);
    policy.concentration = j.value("concentration", 1.0);
    if (j.contains("transition_matrix"))
        policy.transition_matrix = j["transition_matrix"].get<std::vector<std::vector<double>>>();
    policy.validate();
    return policy;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(ParseError::Kind::Io, 0, "cannot open for writing: " + path);
    out << header_to_json(traj).dump() << '\n';
    for (const auto& step : traj.steps) out << step_to_json(step, traj.mode).dump() << '\n';
    if (!out) throw ParseError(ParseError::Kind::Io, 0, "write failed: " + path);
}

LoadedTrajectory load_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::Io, 0, "cannot open: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(ParseError::Kind::MalformedRecord, 1, "empty trajectory file");

    const json header = parse_line(line, 1);
    const std::string format = require_field<std::string>(header, "format", 1);
    if (format != kFormatVersion)
        throw ParseError(ParseError::Kind::VersionMismatch, 1,
                         "unsupported format version: " + format);

    Trajectory traj;
    traj.format = format;
    const std::string mode = require_field<std::string>(header, "mode", 1);
    if (mode == "per_step") traj.mode = CandidateMode::PerStep;
    else if (mode == "global") traj.mode = CandidateMode::GlobalVocabulary;
    else throw ParseError(ParseError::Kind::MalformedRecord, 1, "unknown mode: " + mode);
    traj.method = embed_method_from_string(require_field<std::string>(header, "method", 1));

    const json params = require_field<json>(header, "params", 1);
    traj.w = require_field<std::uint32_t>(params, "w", 1);
    traj.m = require_field<std::uint32_t>(params, "m", 1);
    traj.n = require_field<std::uint32_t>(params, "n", 1);
    traj.n_min = require_field<std::uint32_t>(params, "n_min", 1);
    traj.gamma = require_field<double>(params, "gamma", 1);
    traj.delta = require_field<double>(params, "delta", 1);

    try {
        traj.policy = policy_from_json(require_field<json>(header, "policy", 1));
    } catch (const InvalidParameter& e) {
        throw ParseError(ParseError::Kind::MalformedRecord, 1, e.what());
    }
    traj.seed = header.value("seed", std::uint64_t{0});
    if (traj.mode == CandidateMode::GlobalVocabulary)
        traj.vocabulary = require_field<std::vector<ActionId>>(header, "vocabulary", 1);
    if (header.contains("attacks"))
        for (const auto& a : header["attacks"])
            traj.attacks.push_back({a.value("type", ""), a.value("rho", 0.0),
                                    a.value("keep", std::uint64_t{0}),
                                    a.value("seed", std::uint64_t{0})});

    std::size_t lineno = 1;
    std::uint64_t prev_t = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json j = parse_line(line, lineno);
        TrajectoryStep step;
        step.t = require_field<std::uint64_t>(j, "t", lineno);
        if (step.t != prev_t + 1)
            throw ParseError(ParseError::Kind::NonMonotoneStep, lineno,
                             "step index " + std::to_string(step.t) + " after " +
                                 std::to_string(prev_t));
        prev_t = step.t;
        step.action = require_field<ActionId>(j, "action", lineno);
        step.watermarked = require_field<bool>(j, "watermarked", lineno);
        step.n_eff = require_field<std::uint32_t>(j, "n_eff", lineno);
        if (traj.mode == CandidateMode::PerStep) {
            if (!j.contains("candidates"))
                throw ParseError(ParseError::Kind::MissingCandidates, lineno,
                                 "per-step mode record without candidates");
            step.candidates = require_field<std::vector<ActionId>>(j, "candidates", lineno);
        }
        if (j.contains("elicited_probs"))
            step.elicited_probs = require_field<std::vector<double>>(j, "elicited_probs", lineno);
        if (j.contains("tilted_probs"))
            step.tilted_probs = require_field<std::vector<double>>(j, "tilted_probs", lineno);

        const std::vector<ActionId>& cands =
            traj.mode == CandidateMode::PerStep ? step.candidates : traj.vocabulary;
        bool found = false;
        for (const auto& c : cands)
            if (c == step.action) {
                found = true;
                break;
            }
        if (!found)
            throw ParseError(ParseError::Kind::ActionNotInCandidates, lineno,
                             "action '" + step.action + "' not in its candidate set");
        traj.steps.push_back(std::move(step));
    }

    LoadedTrajectory loaded;
    loaded.observed = ObservedSequence::from_trajectory(traj);
    loaded.trajectory = std::move(traj);
    return loaded;
}

WatermarkParams params_from_trajectory(const Trajectory& traj, const SecretKey& key) {
    WatermarkParams params;
    params.w = traj.w;
    params.m = traj.m;
    params.n = traj.n;
    params.n_min = traj.n_min;
    params.gamma = traj.gamma;
    params.delta = traj.delta;
    params.key = key;
    return params;
}

SecretKey generate_key() {
    std::random_device rd;
    SecretKey key;
    for (std::size_t i = 0; i < key.bytes.size(); i += 4) {
        const std::uint32_t v = rd();
        key.bytes[i] = std::uint8_t(v >> 24);
        key.bytes[i + 1] = std::uint8_t(v >> 16);
        key.bytes[i + 2] = std::uint8_t(v >> 8);
        key.bytes[i + 3] = std::uint8_t(v);
    }
    return key;
}

SecretKey generate_key(Rng64& rng) {
    SecretKey key;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t v = rng.next_u64();
        for (int b = 0; b < 8; ++b) key.bytes[8 * i + b] = std::uint8_t(v >> (56 - 8 * b));
    }
    return key;
}

void save_key(const SecretKey& key, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(ParseError::Kind::Io, 0, "cannot open for writing: " + path);
    out << key.to_hex() << '\n';
    if (!out) throw ParseError(ParseError::Kind::Io, 0, "write failed: " + path);
}

SecretKey load_key(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::Io, 0, "cannot open: " + path);
    std::string hex;
    std::getline(in, hex);
    while (!hex.empty() && (hex.back() == '\r' || hex.back() == '\n')) hex.pop_back();
    for (char c : hex)
        if (c >= 'A' && c <= 'F')
            throw ParseError(ParseError::Kind::KeyFormat, 1, "key hex must be lowercase");
    return SecretKey::from_hex(hex);
}

EmbedMethod embed_method_from_string(const std::string& s) {
    if (s == "seqwm") return EmbedMethod::SeqWm;
    if (s == "round_indexed" || s == "round-indexed") return EmbedMethod::RoundIndexed;
    if (s == "unwatermarked") return EmbedMethod::Unwatermarked;
    throw InvalidParameter("unknown embed method: " + s);
}

std::string to_string(EmbedMethod m) {
    switch (m) {
        case EmbedMethod::SeqWm: return "seqwm";
        case EmbedMethod::RoundIndexed: return "round_indexed";
        case EmbedMethod::Unwatermarked: return "unwatermarked";
    }
    return "unknown";
}

}  // namespace seqwm
