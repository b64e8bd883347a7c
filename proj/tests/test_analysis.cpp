#include <doctest.h>

#include <cmath>

#include "seqwm/analysis.hpp"
#include "seqwm/errors.hpp"

using namespace seqwm;

TEST_CASE("first-order hit-rate prediction") {
    CHECK(predict_p1(0.3, 0.0, 8) == doctest::Approx(0.3));
    CHECK(predict_p1(0.3, 2.0, 8) == doctest::Approx(0.3525));
    CHECK_THROWS_AS(predict_p1(0.0, 1.0, 8), InvalidParameter);
}

TEST_CASE("signal-to-noise prediction") {
    CHECK(*predict_snr(103, 3, 8, 0.0, 0.3) == doctest::Approx(0.0));
    CHECK(*predict_snr(103, 3, 8, 2.0, 0.3) == doctest::Approx(3.2404).epsilon(1e-4));
    CHECK_FALSE(predict_snr(3, 3, 8, 2.0, 0.3).has_value());
}

TEST_CASE("distributional cost prediction") {
    CHECK(predict_kl(0.0, 8, 0.3) == doctest::Approx(0.0));
    CHECK(predict_kl(2.0, 8, 0.3) == doctest::Approx(0.0525));
}

TEST_CASE("snr^2 over kl is independent of the channel count") {
    const double reference = [&] {
        const double snr = *predict_snr(103, 3, 1, 1.3, 0.3);
        return snr * snr / predict_kl(1.3, 1, 0.3);
    }();
    for (std::uint32_t m : {2u, 4u, 8u, 16u}) {
        const double snr = *predict_snr(103, 3, m, 1.3, 0.3);
        const double ratio = snr * snr / predict_kl(1.3, m, 0.3);
        CHECK(std::abs(ratio - reference) < 1e-9 * reference);
    }
    // and equals 2 (T - w) exactly
    CHECK(reference == doctest::Approx(2.0 * 100.0).epsilon(1e-12));
}

TEST_CASE("mean shift and deletion formulas") {
    CHECK(*predict_mean_shift(103, 3, 2.0, 0.3) == doctest::Approx(42.0));
    CHECK_FALSE(predict_mean_shift(3, 3, 2.0, 0.3).has_value());

    CHECK(deletion_bound(0, 3, 8) == 0);
    CHECK(deletion_bound(20, 3, 8) == 640);

    CHECK(expected_aligned_prefix(100, 0) == doctest::Approx(100.0));
    CHECK(expected_aligned_prefix(100, 9) == doctest::Approx(9.1));
    CHECK_THROWS_AS(expected_aligned_prefix(10, 11), InvalidParameter);
}

TEST_CASE("prediction bundle serializes every field") {
    const PowerPrediction pred = predict(103, 3, 8, 2.0, 0.3, 20);
    const std::string j = pred.to_json();
    for (const char* field : {"\"p0\"", "\"p1\"", "\"snr\"", "\"kl_per_step\"", "\"mean_shift\"",
                              "\"deletion_bound\"", "\"expected_aligned_prefix\""})
        CHECK(j.find(field) != std::string::npos);
    CHECK(pred.deletion_bound == 640);
}

namespace {

SweepConfig tiny_sweep_config() {
    SweepConfig config;
    config.master_seed = 99;
    config.trials = 6;
    config.calibration_M = 40;
    config.T = 40;
    config.policy.kind = PolicyKind::Uniform;
    config.policy.vocabulary = make_vocabulary(8);
    config.policy.rng_seed = 4;
    config.methods = {"seqwm", "unwatermarked"};
    config.gammas = {0.0, 2.5};
    config.rhos = {0.0, 0.2};
    config.ms = {2};
    return config;
}

}  // namespace

TEST_CASE("sweep emits one row per grid cell with sane rates") {
    const SweepConfig config = tiny_sweep_config();
    const auto rows = run_sweep(config);
    CHECK(rows.size() == 8);  // 2 methods x 2 gammas x 2 rhos x 1 m
    for (const auto& row : rows) {
        CHECK(row.trials == config.trials);
        for (double rate :
             {row.tpr_alpha01, row.tpr_alpha05, row.fpr_alpha01, row.fpr_alpha05}) {
            CHECK(rate >= 0.0);
            CHECK(rate <= 1.0);
        }
        CHECK(row.mean_p > 0.0);
        CHECK(row.mean_p <= 1.0);
        CHECK(row.runtime_seconds >= 0.0);
    }
}

TEST_CASE("sweep tables are identical across runs and job counts") {
    // Every statistical column is bit-identical for any job count; only the
    // measured runtime column varies run to run.
    const auto strip_runtime = [](std::string csv) {
        std::string out;
        std::size_t start = 0;
        while (start < csv.size()) {
            std::size_t end = csv.find('\n', start);
            if (end == std::string::npos) end = csv.size();
            std::string line = csv.substr(start, end - start);
            const std::size_t last_comma = line.rfind(',');
            out += line.substr(0, last_comma);
            out += '\n';
            start = end + 1;
        }
        return out;
    };
    SweepConfig config = tiny_sweep_config();
    config.jobs = 1;
    const std::string csv1 = sweep_rows_to_csv(run_sweep(config));
    config.jobs = 2;
    const std::string csv2 = sweep_rows_to_csv(run_sweep(config));
    CHECK(strip_runtime(csv1) == strip_runtime(csv2));
    CHECK(csv1.rfind("method,gamma,rho,m,trials,", 0) == 0);
}

TEST_CASE("sweep config parses from json") {
    const std::string text = R"({
        "master_seed": 5, "trials": 3, "M": 20, "T": 30,
        "policy": {"kind": "uniform", "vocabulary_size": 6, "rng_seed": 2},
        "base": {"w": 2, "n": 2, "n_min": 1, "delta": 0.1},
        "grid": {"method": ["seqwm"], "gamma": [1.0, 2.0], "rho": [0.0], "m": [4]}
    })";
    const SweepConfig config = sweep_config_from_json(text);
    CHECK(config.trials == 3);
    CHECK(config.base.w == 2);
    CHECK(config.base.delta == doctest::Approx(0.1));
    CHECK(config.gammas.size() == 2);
    CHECK(config.policy.vocabulary.size() == 6);
    CHECK(run_sweep(config).size() == 2);

    CHECK_THROWS_AS(sweep_config_from_json("{\"policy\": {\"kind\": \"nope\"}}"),
                    InvalidParameter);
}

TEST_CASE("unwatermarked cells stay near the decision level") {
    SweepConfig config = tiny_sweep_config();
    config.trials = 40;
    config.methods = {"unwatermarked"};
    config.gammas = {0.0};
    config.rhos = {0.0};
    const auto rows = run_sweep(config);
    REQUIRE(rows.size() == 1);
    // TPR estimates a false-positive rate here: alpha + 3 binomial sigma
    CHECK(rows[0].tpr_alpha05 <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 40.0));
    CHECK(rows[0].fpr_alpha05 <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 40.0));
}
