#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "seqwm/detector.hpp"
#include "seqwm/errors.hpp"
#include "seqwm/trajectory_io.hpp"

using namespace seqwm;
using nlohmann::json;

namespace {

json load_json(const std::string& name) {
    std::ifstream in(std::string(SEQWM_TEST_DATA_DIR) + "/" + name);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

ObservedSequence global_obs(std::vector<ActionId> actions, std::vector<ActionId> vocab) {
    ObservedSequence obs;
    obs.actions = std::move(actions);
    obs.vocabulary = std::move(vocab);
    return obs;
}

PolicySpec uniform_policy(std::size_t A, std::uint64_t seed) {
    PolicySpec p;
    p.kind = PolicyKind::Uniform;
    p.vocabulary = make_vocabulary(A);
    p.rng_seed = seed;
    return p;
}

}  // namespace

TEST_CASE("sliding and round-indexed scores match the frozen reference") {
    // The reference values come from an exhaustive evaluation of every
    // (window, channel) pair by the independent oracle implementation.
    const json v = load_json("score_vectors.json");
    WatermarkParams params;
    params.key = SecretKey::from_hex(v["key_hex"].get<std::string>());
    params.w = v["w"].get<std::uint32_t>();
    params.m = v["m"].get<std::uint32_t>();
    params.n = v["n_eff"].get<std::uint32_t>();
    params.n_min = 1;

    const ObservedSequence obs = global_obs(v["actions"].get<std::vector<ActionId>>(),
                                            v["vocabulary"].get<std::vector<ActionId>>());

    const ScoreResult s = sliding_score(params.key, obs, params);
    CHECK(s.score == v["sliding"]["score"].get<std::int64_t>());
    CHECK(s.per_window_hits == v["sliding"]["per_window_hits"].get<std::vector<std::uint32_t>>());
    CHECK(s.indicator_count == std::int64_t((obs.length() - params.w) * params.m));

    const ScoreResult r = round_indexed_score(params.key, obs, params);
    CHECK(r.score == v["round_indexed"]["score"].get<std::int64_t>());
    CHECK(r.per_window_hits ==
          v["round_indexed"]["per_step_hits"].get<std::vector<std::uint32_t>>());
}

TEST_CASE("short sequences score zero with no indicators") {
    WatermarkParams params;
    params.key.bytes.fill(9);
    params.w = 3;
    const ObservedSequence obs = global_obs({"a0", "a1", "a2"}, make_vocabulary(5).actions);
    const ScoreResult s = sliding_score(params.key, obs, params);
    CHECK(s.score == 0);
    CHECK(s.indicator_count == 0);
    CHECK_FALSE(hit_rate(s).has_value());
}

TEST_CASE("null mean of the sliding score is N * n/A on uniform sequences") {
    WatermarkParams params;
    params.key.bytes.fill(0x5c);
    const PolicySpec policy = uniform_policy(10, 2);
    double total = 0.0;
    const int runs = 200;
    const std::uint64_t T = 103;
    for (int i = 0; i < runs; ++i) {
        Rng64 rng(mix_seed(31, std::uint64_t(i)));
        const Trajectory traj = simulate_trajectory(policy, T, rng, false);
        total += double(
            sliding_score(params.key, ObservedSequence::from_trajectory(traj), params).score);
    }
    const double mean = total / runs;
    // E[S] = (T - w) m p0 = 100 * 8 * 0.3 = 240, sd of the mean ~ 1.15
    const double sd = std::sqrt(800 * 0.3 * 0.7 / double(runs));
    CHECK(std::abs(mean - 240.0) < 3.0 * sd);

    // score bounds hold on every run
    Rng64 rng(123);
    const Trajectory traj = simulate_trajectory(policy, T, rng, false);
    const ScoreResult s =
        sliding_score(params.key, ObservedSequence::from_trajectory(traj), params);
    CHECK(s.score >= 0);
    CHECK(s.score <= s.indicator_count);
    std::int64_t sum = 0;
    for (auto h : s.per_window_hits) sum += h;
    CHECK(sum == s.score);
}

TEST_CASE("appending subset-consistent steps never decreases the score") {
    WatermarkParams params;
    params.key.bytes.fill(0xee);
    params.w = 2;
    params.m = 4;
    params.n = 3;
    const auto vocab = make_vocabulary(8).actions;
    ObservedSequence obs = global_obs({"a0", "a1", "a2", "a3"}, vocab);
    std::int64_t prev = sliding_score(params.key, obs, params).score;
    for (int grow = 0; grow < 30; ++grow) {
        // extend with an action drawn from the first channel's subset
        std::vector<ActionId> window(obs.actions.end() - 2, obs.actions.end());
        const auto subset = sample_subset(params.key, encode_context(window, 1), vocab, 3);
        obs.actions.push_back(subset.front());
        const std::int64_t next = sliding_score(params.key, obs, params).score;
        CHECK(next >= prev);
        prev = next;
    }
}

TEST_CASE("encoder and detector derive identical subsets on a clean run") {
    WatermarkParams params;
    params.key.bytes.fill(0x3d);
    const PolicySpec policy = uniform_policy(9, 77);
    Rng64 rng(42);
    std::vector<StepEncoding> captured;
    const Trajectory traj = encode_trajectory(params, policy, 60, rng, {}, &captured);
    REQUIRE(captured.size() == traj.steps.size());

    const auto actions = traj.actions();
    for (std::size_t t = params.w; t < actions.size(); ++t) {
        const std::vector<ActionId> window(actions.begin() + (t - params.w),
                                           actions.begin() + t);
        const auto detector_side =
            guided_subsets(params, window, traj.vocabulary, captured[t].n_eff);
        CHECK(detector_side == captured[t].subsets);
    }
}

TEST_CASE("round-indexed embed/detect pairs align on clean sequences") {
    // The baseline encoder seeds by absolute step index with the same channel
    // convention, so its clean-sequence shift matches T gamma p0 (1-p0).
    WatermarkParams params;
    params.key.bytes.fill(0x44);
    const PolicySpec policy = uniform_policy(10, 61);
    const std::uint64_t T = 103;
    const int runs = 100;
    double total = 0.0;
    for (int i = 0; i < runs; ++i) {
        WatermarkParams p = params;
        Rng64 key_rng(mix_seed(888, std::uint64_t(i)));
        p.key = generate_key(key_rng);
        Rng64 rng(mix_seed(999, std::uint64_t(i)));
        EncodeOptions options;
        options.method = EmbedMethod::RoundIndexed;
        options.record_probs = false;
        const Trajectory traj = encode_trajectory(p, policy, T, rng, options);
        total +=
            double(round_indexed_score(p.key, ObservedSequence::from_trajectory(traj), p).score);
    }
    const double shift = total / runs - double(T) * 8.0 * 0.3;
    const double predicted = double(T) * 2.0 * 0.3 * 0.7;  // m cancels in the aggregate
    CHECK(shift / predicted > 0.8);
    CHECK(shift / predicted < 1.5);
}

TEST_CASE("per-step mode requires logged candidates and flags missing ones") {
    WatermarkParams params;
    params.key.bytes.fill(1);
    params.w = 1;
    ObservedSequence obs;
    obs.mode = CandidateMode::PerStep;
    obs.actions = {"x", "y", "z"};
    obs.step_candidates = {{"x", "y"}, {"y", "z"}};  // third step missing
    CHECK_THROWS_AS(sliding_score(params.key, obs, params), ParseError);

    obs.step_candidates.push_back({"z", "x"});
    CHECK_NOTHROW(sliding_score(params.key, obs, params));

    // action absent from its logged candidates is a contract violation
    obs.step_candidates[2] = {"x", "y"};
    CHECK_THROWS_AS(sliding_score(params.key, obs, params), InvalidParameter);
}

TEST_CASE("steps with degenerate candidate sets score zero but stay counted") {
    WatermarkParams params;
    params.key.bytes.fill(0x66);
    params.w = 1;
    params.m = 4;
    ObservedSequence obs;
    obs.mode = CandidateMode::PerStep;
    obs.actions = {"x", "y", "x", "z"};
    obs.step_candidates = {{"x", "y"}, {"y", "x"}, {"x"}, {"z", "x", "y"}};
    const ScoreResult s = sliding_score(params.key, obs, params);
    CHECK(s.indicator_count == 3 * 4);   // N = (T'-w) m regardless of skips
    CHECK(s.per_window_hits[1] == 0);    // window scoring the singleton step
    const auto p0s = null_hit_rates(obs, params, DetectorKind::Sliding);
    for (std::size_t i = 4; i < 8; ++i) CHECK(p0s[i] == 0.0);  // skipped step
}

TEST_CASE("z score matches the direct binomial computation") {
    ScoreResult s;
    s.score = 296;
    s.indicator_count = 800;
    const std::vector<double> p0(800, 0.3);
    const auto z = z_score(s, p0);
    REQUIRE(z.has_value());
    CHECK(*z == doctest::Approx((296.0 - 240.0) / std::sqrt(168.0)).epsilon(1e-12));

    s.score = 240;
    CHECK(*z_score(s, p0) == doctest::Approx(0.0));

    const std::vector<double> degenerate(800, 0.0);
    CHECK_FALSE(z_score(s, degenerate).has_value());
    CHECK_THROWS_AS(z_score(s, std::vector<double>(10, 0.3)), InvalidParameter);
}

TEST_CASE("hit rates and per-indicator null rates") {
    ScoreResult s;
    s.indicator_count = 40;
    s.score = 40;
    CHECK(*hit_rate(s) == doctest::Approx(1.0));
    s.score = 0;
    CHECK(*hit_rate(s) == doctest::Approx(0.0));

    WatermarkParams params;
    params.key.bytes.fill(4);
    const ObservedSequence obs =
        global_obs({"a0", "a1", "a2", "a3", "a4"}, make_vocabulary(10).actions);
    const auto sliding = null_hit_rates(obs, params, DetectorKind::Sliding);
    CHECK(sliding.size() == std::size_t(2 * params.m));
    for (double p : sliding) CHECK(p == doctest::Approx(0.3));
    const auto round = null_hit_rates(obs, params, DetectorKind::RoundIndexed);
    CHECK(round.size() == std::size_t(5 * params.m));
}
