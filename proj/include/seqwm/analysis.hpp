#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqwm/calibration.hpp"
#include "seqwm/encoder.hpp"

namespace seqwm {

/// Closed-form first-order predictions for the sum-score detector.
struct PowerPrediction {
    double p0 = 0.0;                      // null per-indicator hit rate n_eff/A
    double p1 = 0.0;                      // first-order watermarked hit rate
    double snr = 0.0;                     // expected shift over null sd
    double kl_per_step = 0.0;             // per-step distributional cost, nats
    double mean_shift = 0.0;              // expected score shift over the run
    std::int64_t deletion_bound = 0;      // worst-case invalidated indicators
    double expected_aligned_prefix = 0.0; // round-indexed aligned positions

    std::string to_json() const;
};

/// p1 = p0 + (gamma/m) p0 (1 - p0); exact as gamma -> 0.
double predict_p1(double p0, double gamma, std::uint32_t m);

/// sqrt((T - w)/m) * gamma * sqrt(p0 (1 - p0)); empty when T <= w.
std::optional<double> predict_snr(std::uint64_t T, std::uint32_t w, std::uint32_t m,
                                  double gamma, double p0);

/// gamma^2 p0 (1 - p0) / (2 m), nats per step.
double predict_kl(double gamma, std::uint32_t m, double p0);

/// (T - w) gamma p0 (1 - p0); empty when T <= w.
std::optional<double> predict_mean_shift(std::uint64_t T, std::uint32_t w, double gamma,
                                         double p0);

/// d (w + 1) m — deterministic cap on the sliding-score damage of d deletions.
std::int64_t deletion_bound(std::uint64_t d, std::uint32_t w, std::uint32_t m);

/// (T - d) / (d + 1): expected number of positions before the first of d
/// uniformly random deletions, i.e. how long a round-indexed detector stays
/// aligned.
double expected_aligned_prefix(std::uint64_t T, std::uint64_t d);

PowerPrediction predict(std::uint64_t T, std::uint32_t w, std::uint32_t m, double gamma,
                        double p0, std::uint64_t d = 0);

// ---------------------------------------------------------------------------
// Sweep harness
// ---------------------------------------------------------------------------

struct SweepConfig {
    std::uint64_t master_seed = 1;
    int trials = 100;             // trajectories per grid cell
    int calibration_M = 200;
    std::uint64_t T = 103;
    PolicySpec policy;
    WatermarkParams base;         // per-cell gamma/m overrides applied on top
    std::vector<std::string> methods = {"seqwm", "round_indexed", "unwatermarked"};
    std::vector<double> gammas = {2.0};
    std::vector<double> rhos = {0.0};
    std::vector<std::uint32_t> ms = {8};
    int jobs = 0;
};

struct SweepRow {
    std::string method;
    double gamma = 0.0;
    double rho = 0.0;
    std::uint32_t m = 0;
    int trials = 0;
    double mean_z = 0.0;
    double tpr_alpha01 = 0.0;
    double tpr_alpha05 = 0.0;
    double fpr_alpha01 = 0.0;
    double fpr_alpha05 = 0.0;
    double mean_p = 0.0;
    double mean_hit_rate = 0.0;
    double runtime_seconds = 0.0;
};

/// Fixed CSV header shared by run_sweep output and write_sweep_csv.
extern const char* kSweepCsvHeader;

/// One row per (method, gamma, rho, m) cell. Cell seeds derive from
/// (master_seed, cell index): the table is identical for any job count.
/// TPR columns detect with the embedding key; FPR columns re-detect the same
/// trajectories under an independent decoy key.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows);

SweepConfig sweep_config_from_json(const std::string& json_text);

}  // namespace seqwm
