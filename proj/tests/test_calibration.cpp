#include <doctest.h>

#include <cmath>

#include "seqwm/attacks.hpp"
#include "seqwm/calibration.hpp"
#include "seqwm/errors.hpp"
#include "seqwm/trajectory_io.hpp"

using namespace seqwm;

namespace {

PolicySpec markov_policy(std::size_t A, std::uint64_t seed) {
    // moderately sticky random-ish chain: worst case for a binomial null,
    // exactly what the wrong-key null has to absorb
    PolicySpec p;
    p.kind = PolicyKind::MarkovOrder1;
    p.vocabulary = make_vocabulary(A);
    p.rng_seed = seed;
    Rng64 rng(seed);
    for (std::size_t i = 0; i < A; ++i) {
        std::vector<double> row(A);
        double sum = 0.0;
        for (std::size_t j = 0; j < A; ++j) {
            row[j] = rng.gamma(0.5);
            sum += row[j];
        }
        for (double& v : row) v /= sum;
        p.transition_matrix.push_back(row);
    }
    return p;
}

ObservedSequence null_markov_obs(std::uint64_t seed, std::uint64_t T = 60) {
    static const PolicySpec policy = markov_policy(10, 314);
    Rng64 rng(seed);
    return ObservedSequence::from_trajectory(simulate_trajectory(policy, T, rng, false));
}

}  // namespace

TEST_CASE("empirical p-value counts ties against the watermark") {
    CHECK(p_value(10, {3, 4, 5}) == doctest::Approx(0.25));
    CHECK(p_value(5, {5, 5, 5}) == doctest::Approx(1.0));
    CHECK(p_value(10, {3}) == doctest::Approx(0.5));
    CHECK(p_value(2, {3, 4, 5}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(p_value(1, {}), InvalidParameter);
}

TEST_CASE("parallel key scoring equals the serial reference") {
    WatermarkParams params;
    Rng64 key_rng(8);
    params.key = generate_key(key_rng);
    const ObservedSequence obs = null_markov_obs(1, 80);
    Rng64 rng(77);
    const auto keys = draw_wrong_keys(params.key, 64, rng);
    const auto serial = score_under_keys_serial(keys, obs, params, sliding_score_fn());
    for (int jobs : {1, 2, 4})
        CHECK(score_under_keys(keys, obs, params, sliding_score_fn(), jobs) == serial);
}

TEST_CASE("calibrate assembles a consistent report") {
    WatermarkParams params;
    Rng64 key_rng(21);
    params.key = generate_key(key_rng);

    PolicySpec policy;
    policy.kind = PolicyKind::Uniform;
    policy.vocabulary = make_vocabulary(10);
    policy.rng_seed = 5;
    Rng64 rng(2);
    const Trajectory traj = encode_trajectory(params, policy, 103, rng);
    const ObservedSequence obs = ObservedSequence::from_trajectory(traj);

    CalibrationOptions options;
    options.M = 100;
    options.alpha = 0.01;
    options.seed = 11;
    const auto p0s = null_hit_rates(obs, params, DetectorKind::Sliding);
    const DetectionReport report =
        calibrate(params.key, obs, params, options, sliding_score_fn(), &p0s);

    CHECK(report.null_scores.size() == 100);
    CHECK(report.p_value == doctest::Approx(p_value(report.s_true, report.null_scores)));
    CHECK(report.decision == (report.p_value < options.alpha));
    CHECK(report.hit_rate_defined);
    CHECK(report.z_reference_defined);
    CHECK(report.m == params.m);
    CHECK(report.wall_time_seconds >= 0.0);

    // a watermarked run at the defaults separates cleanly from 100 nulls
    CHECK(report.p_value == doctest::Approx(1.0 / 101).epsilon(1e-9));

    // identical options reproduce the identical report
    const DetectionReport again =
        calibrate(params.key, obs, params, options, sliding_score_fn(), &p0s);
    CHECK(again.s_true == report.s_true);
    CHECK(again.null_scores == report.null_scores);

    // report JSON carries the contract fields
    const std::string j = report.to_json();
    CHECK(j.find("\"s_true\"") != std::string::npos);
    CHECK(j.find("\"null_summary\"") != std::string::npos);
    CHECK(j.find("\"null_scores\"") != std::string::npos);
    CHECK(report.to_json(10).find("\"null_scores\"") == std::string::npos);
}

TEST_CASE("wrong keys never collide with the true key") {
    Rng64 rng(3);
    SecretKey key;
    key.bytes.fill(0);
    const auto keys = draw_wrong_keys(key, 200, rng);
    CHECK(keys.size() == 200);
    for (const auto& k : keys) CHECK_FALSE(k == key);
}

TEST_CASE("false positive rate is bounded by alpha on dependent null sequences") {
    // Markov nulls violate every independence assumption; the wrong-key
    // empirical null must still be valid. Quick version; the acceptance
    // suite runs the full-scale variant.
    WatermarkParams params;
    const int trials = 250, M = 60;
    int rejects05 = 0;
    for (int i = 0; i < trials; ++i) {
        Rng64 rng(mix_seed(919, std::uint64_t(i)));
        const SecretKey key = generate_key(rng);
        const ObservedSequence obs = null_markov_obs(mix_seed(5, std::uint64_t(i)));
        CalibrationOptions options;
        options.M = M;
        options.alpha = 0.05;
        options.seed = mix_seed(7, std::uint64_t(i));
        const DetectionReport rep = calibrate(key, obs, params, options);
        if (rep.p_value <= 0.05) ++rejects05;
    }
    const double rate = double(rejects05) / trials;
    // Pr[p <= 0.05] <= 0.05; allow 2.5 binomial sigma of estimation noise
    CHECK(rate <= 0.05 + 2.5 * std::sqrt(0.05 * 0.95 / trials));
}

TEST_CASE("validity survives corruption applied before detection") {
    WatermarkParams params;
    const int trials = 150, M = 60;
    int rejects = 0;
    for (int i = 0; i < trials; ++i) {
        Rng64 rng(mix_seed(4242, std::uint64_t(i)));
        const SecretKey key = generate_key(rng);
        ObservedSequence obs = null_markov_obs(mix_seed(6, std::uint64_t(i)), 80);
        Rng64 attack_rng(mix_seed(8, std::uint64_t(i)));
        obs = delete_random(obs, 0.3, attack_rng).observed;
        CalibrationOptions options;
        options.M = M;
        options.alpha = 0.05;
        options.seed = mix_seed(9, std::uint64_t(i));
        if (calibrate(key, obs, params, options).p_value <= 0.05) ++rejects;
    }
    CHECK(double(rejects) / trials <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / trials));
}

TEST_CASE("calibration is detector-agnostic") {
    // Same contract with the round-indexed statistic plugged in.
    WatermarkParams params;
    const int trials = 150, M = 60;
    int rejects = 0;
    for (int i = 0; i < trials; ++i) {
        Rng64 rng(mix_seed(31337, std::uint64_t(i)));
        const SecretKey key = generate_key(rng);
        const ObservedSequence obs = null_markov_obs(mix_seed(10, std::uint64_t(i)));
        CalibrationOptions options;
        options.M = M;
        options.alpha = 0.05;
        options.seed = mix_seed(11, std::uint64_t(i));
        if (calibrate(key, obs, params, options, round_indexed_score_fn()).p_value <= 0.05)
            ++rejects;
    }
    CHECK(double(rejects) / trials <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / trials));
}

TEST_CASE("true-key rank is uniform for null generators") {
    WatermarkParams params;
    const auto generator = [](std::uint64_t seed, const SecretKey&) {
        return null_markov_obs(seed, 50);
    };
    const auto report = rank_uniformity_check(generator, params, 2000, 20, 0.01, 2025);
    CHECK(report.rank_counts.size() == 21);
    std::uint64_t total = 0;
    for (auto c : report.rank_counts) total += c;
    CHECK(total == 2000);
    CHECK(report.uniform);
}

TEST_CASE("sequences watermarked under an unrelated key are still null") {
    WatermarkParams params;
    PolicySpec policy;
    policy.kind = PolicyKind::Uniform;
    policy.vocabulary = make_vocabulary(10);
    const auto report = rank_uniformity_check(
        [&](std::uint64_t seed, const SecretKey&) {
            Rng64 rng(seed);
            WatermarkParams other = params;
            Rng64 key_rng(mix_seed(seed, 0xbadcafeULL));
            other.key = generate_key(key_rng);  // never shown to the detector
            return ObservedSequence::from_trajectory(
                encode_trajectory(other, policy, 60, rng));
        },
        params, 600, 20, 0.01, 1111);
    CHECK(report.uniform);
}

TEST_CASE("true-key rank piles at the extreme under the alternative") {
    WatermarkParams params;
    PolicySpec policy;
    policy.kind = PolicyKind::Uniform;
    policy.vocabulary = make_vocabulary(10);
    const auto report = rank_uniformity_check(
        [&](std::uint64_t seed, const SecretKey& key_true) {
            Rng64 rng(seed);
            WatermarkParams embed_params = params;
            embed_params.key = key_true;
            return ObservedSequence::from_trajectory(
                encode_trajectory(embed_params, policy, 103, rng));
        },
        params, 120, 20, 0.01, 909);
    CHECK_FALSE(report.uniform);
    // top rank dominates
    CHECK(report.rank_counts.front() > 60);
}
