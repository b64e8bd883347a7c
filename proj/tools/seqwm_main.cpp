// Command-line front end: key generation, trajectory simulation and
// embedding, calibrated detection, corruption attacks, sweeps, predictions.
//
// Exit codes: 0 detected / ran fine, 3 watermark not detected (detect only),
// 1 usage error, 2 I/O or data error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seqwm/analysis.hpp"
#include "seqwm/attacks.hpp"
#include "seqwm/calibration.hpp"
#include "seqwm/detector.hpp"
#include "seqwm/encoder.hpp"
#include "seqwm/errors.hpp"
#include "seqwm/trajectory_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNotDetected = 3;

using nlohmann::json;

struct RunConfig {
    seqwm::PolicySpec policy;
    seqwm::WatermarkParams params;
    std::uint64_t T = 103;
    std::uint64_t seed = 1;
    std::string method = "seqwm";
    bool record_probs = true;
};

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw seqwm::ParseError(seqwm::ParseError::Kind::Io, 0, "cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw seqwm::ParseError(seqwm::ParseError::Kind::MalformedRecord, 0,
                                path + ": " + e.what());
    }
    RunConfig config;
    config.policy = seqwm::policy_from_json(j.at("policy"));
    if (j.contains("watermark")) {
        const json& w = j["watermark"];
        config.params.w = w.value("w", 3u);
        config.params.m = w.value("m", 8u);
        config.params.n = w.value("n", 3u);
        config.params.n_min = w.value("n_min", 2u);
        config.params.gamma = w.value("gamma", 2.0);
        config.params.delta = w.value("delta", 0.2);
    }
    config.T = j.value("T", std::uint64_t{103});
    config.seed = j.value("seed", std::uint64_t{1});
    config.method = j.value("method", std::string("seqwm"));
    config.record_probs = j.value("record_probs", true);
    return config;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw seqwm::ParseError(seqwm::ParseError::Kind::Io, 0,
                                      "cannot open for writing: " + path);
    out << text;
    if (!out) throw seqwm::ParseError(seqwm::ParseError::Kind::Io, 0, "write failed: " + path);
}

int run(int argc, char** argv) {
    CLI::App app{"sequential behavioral watermarking for agent action trajectories"};
    app.require_subcommand(1);

    // ---- keygen ----
    auto* keygen = app.add_subcommand("keygen", "write a fresh 256-bit key file");
    std::string keygen_out;
    keygen->add_option("--out", keygen_out, "key file path")->required();

    // ---- simulate / embed (shared knobs) ----
    std::string config_path, key_path, traj_out;
    std::string method_flag;
    std::optional<double> gamma_flag, delta_flag;
    std::optional<std::uint32_t> m_flag, w_flag, n_flag, n_min_flag;
    std::optional<std::uint64_t> t_flag, seed_flag;

    auto* simulate = app.add_subcommand("simulate", "generate an unwatermarked trajectory");
    simulate->add_option("--config", config_path, "run config JSON")->required();
    simulate->add_option("--out", traj_out, "trajectory file")->required();
    simulate->add_option("--T", t_flag, "horizon override");
    simulate->add_option("--seed", seed_flag, "run seed override");

    auto* embed = app.add_subcommand("embed", "generate a watermarked trajectory");
    embed->add_option("--key", key_path, "key file")->required();
    embed->add_option("--config", config_path, "run config JSON")->required();
    embed->add_option("--out", traj_out, "trajectory file")->required();
    embed->add_option("--method", method_flag, "seqwm | round-indexed");
    embed->add_option("--gamma", gamma_flag, "bias strength override");
    embed->add_option("--m", m_flag, "channel count override");
    embed->add_option("--w", w_flag, "window length override");
    embed->add_option("--n", n_flag, "subset size override");
    embed->add_option("--n-min", n_min_flag, "minimum subset size override");
    embed->add_option("--delta", delta_flag, "probability floor override");
    embed->add_option("--T", t_flag, "horizon override");
    embed->add_option("--seed", seed_flag, "run seed override");

    // ---- detect ----
    auto* detect = app.add_subcommand("detect", "random-key calibrated detection");
    std::string detect_traj, detect_out, detect_method = "auto";
    int detect_M = 1000;
    double detect_alpha = 0.01;
    std::uint64_t detect_seed = 1;
    int detect_jobs = 0;
    detect->add_option("--key", key_path, "key file")->required();
    detect->add_option("--traj", detect_traj, "trajectory file")->required();
    detect->add_option("--M", detect_M, "calibration keys (default 1000)");
    detect->add_option("--alpha", detect_alpha, "decision level (default 0.01)");
    detect->add_option("--out", detect_out, "detection report JSON")->required();
    detect->add_option("--method", detect_method, "auto | seqwm | round-indexed");
    detect->add_option("--seed", detect_seed, "wrong-key draw seed");
    detect->add_option("--jobs", detect_jobs, "calibration threads (0 = all)");

    // ---- attack ----
    auto* attack = app.add_subcommand("attack", "corrupt a trajectory file");
    std::string attack_traj, attack_out, attack_type;
    std::optional<double> attack_rho;
    std::optional<std::uint64_t> attack_keep;
    std::uint64_t attack_seed = 1;
    attack->add_option("--traj", attack_traj, "input trajectory")->required();
    attack->add_option("--type", attack_type, "delete | truncate | substitute")->required();
    attack->add_option("--rho", attack_rho, "corruption fraction (delete/substitute)");
    attack->add_option("--keep", attack_keep, "actions to keep (truncate)");
    attack->add_option("--seed", attack_seed, "attack seed");
    attack->add_option("--out", attack_out, "output trajectory")->required();

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "grid experiment harness");
    std::string sweep_config, sweep_out;
    int sweep_jobs = -1;
    sweep->add_option("--config", sweep_config, "sweep config JSON")->required();
    sweep->add_option("--out", sweep_out, "result CSV")->required();
    sweep->add_option("--jobs", sweep_jobs, "threads (0 = all; default from config)");

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "print closed-form power predictions");
    std::uint64_t pred_T = 103, pred_d = 0;
    std::uint32_t pred_w = 3, pred_m = 8;
    double pred_gamma = 2.0, pred_p0 = 0.3;
    std::optional<double> pred_rho;
    predict->add_option("--T", pred_T, "horizon")->required();
    predict->add_option("--w", pred_w, "window length");
    predict->add_option("--m", pred_m, "channel count");
    predict->add_option("--gamma", pred_gamma, "bias strength");
    predict->add_option("--p0", pred_p0, "null hit rate")->required();
    predict->add_option("--d", pred_d, "deletion count");
    predict->add_option("--rho", pred_rho, "deletion fraction (sets d = round(rho*T))");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (keygen->parsed()) {
        const seqwm::SecretKey key = seqwm::generate_key();
        seqwm::save_key(key, keygen_out);
        std::cerr << "wrote key to " << keygen_out << "\n";
        return kExitOk;
    }

    if (simulate->parsed() || embed->parsed()) {
        RunConfig config = load_run_config(config_path);
        if (t_flag) config.T = *t_flag;
        if (seed_flag) config.seed = *seed_flag;
        seqwm::Rng64 rng(config.seed);
        seqwm::Trajectory traj;
        if (simulate->parsed()) {
            traj = seqwm::simulate_trajectory(config.policy, config.T, rng, config.record_probs);
        } else {
            if (method_flag.empty()) method_flag = config.method;
            if (gamma_flag) config.params.gamma = *gamma_flag;
            if (delta_flag) config.params.delta = *delta_flag;
            if (m_flag) config.params.m = *m_flag;
            if (w_flag) config.params.w = *w_flag;
            if (n_flag) config.params.n = *n_flag;
            if (n_min_flag) config.params.n_min = *n_min_flag;
            config.params.key = seqwm::load_key(key_path);
            seqwm::EncodeOptions options;
            options.method = seqwm::embed_method_from_string(method_flag);
            options.record_probs = config.record_probs;
            traj = seqwm::encode_trajectory(config.params, config.policy, config.T, rng, options);
        }
        traj.seed = config.seed;
        seqwm::save_trajectory(traj, traj_out);
        std::cerr << "wrote " << traj.steps.size() << " steps to " << traj_out << "\n";
        return kExitOk;
    }

    if (detect->parsed()) {
        const seqwm::SecretKey key = seqwm::load_key(key_path);
        const seqwm::LoadedTrajectory loaded = seqwm::load_trajectory(detect_traj);
        const seqwm::WatermarkParams params =
            seqwm::params_from_trajectory(loaded.trajectory, key);

        if (detect_method == "auto")
            detect_method = loaded.trajectory.method == seqwm::EmbedMethod::RoundIndexed
                                ? "round-indexed"
                                : "seqwm";
        const bool round = seqwm::embed_method_from_string(detect_method) ==
                           seqwm::EmbedMethod::RoundIndexed;
        const seqwm::ScoreFn score =
            round ? seqwm::round_indexed_score_fn() : seqwm::sliding_score_fn();
        const std::vector<double> p0s = seqwm::null_hit_rates(
            loaded.observed, params,
            round ? seqwm::DetectorKind::RoundIndexed : seqwm::DetectorKind::Sliding);

        seqwm::CalibrationOptions options;
        options.M = detect_M;
        options.alpha = detect_alpha;
        options.seed = detect_seed;
        options.jobs = detect_jobs;
        const seqwm::DetectionReport report =
            seqwm::calibrate(key, loaded.observed, params, options, score, &p0s);

        write_text_file(detect_out, report.to_json() + "\n");
        std::fprintf(stderr, "S_true=%lld p=%.6g decision=%s", (long long)report.s_true,
                     report.p_value, report.decision ? "watermarked" : "not detected");
        if (report.z_reference_defined) std::fprintf(stderr, " z_ref=%.3f", report.z_reference);
        if (report.hit_rate_defined) std::fprintf(stderr, " hit=%.3f", report.hit_rate);
        std::fprintf(stderr, " (report: %s)\n", detect_out.c_str());
        return report.decision ? kExitOk : kExitNotDetected;
    }

    if (attack->parsed()) {
        const seqwm::LoadedTrajectory loaded = seqwm::load_trajectory(attack_traj);
        seqwm::Trajectory out;
        if (attack_type == "delete") {
            if (!attack_rho) throw CLI::ValidationError("attack", "--type delete needs --rho");
            out = seqwm::delete_random(loaded.trajectory, *attack_rho, attack_seed);
        } else if (attack_type == "truncate") {
            if (!attack_keep) throw CLI::ValidationError("attack", "--type truncate needs --keep");
            out = seqwm::truncate_trajectory(loaded.trajectory, *attack_keep);
        } else if (attack_type == "substitute") {
            if (!attack_rho)
                throw CLI::ValidationError("attack", "--type substitute needs --rho");
            out = seqwm::substitute_random(loaded.trajectory, *attack_rho, attack_seed);
        } else {
            throw CLI::ValidationError("attack", "unknown --type: " + attack_type);
        }
        seqwm::save_trajectory(out, attack_out);
        std::cerr << "wrote " << out.steps.size() << " steps to " << attack_out << "\n";
        return kExitOk;
    }

    if (sweep->parsed()) {
        std::ifstream in(sweep_config);
        if (!in)
            throw seqwm::ParseError(seqwm::ParseError::Kind::Io, 0,
                                    "cannot open: " + sweep_config);
        std::stringstream buffer;
        buffer << in.rdbuf();
        seqwm::SweepConfig config = seqwm::sweep_config_from_json(buffer.str());
        if (sweep_jobs >= 0) config.jobs = sweep_jobs;
        const std::vector<seqwm::SweepRow> rows = seqwm::run_sweep(config);
        write_text_file(sweep_out, seqwm::sweep_rows_to_csv(rows));
        std::cerr << "wrote " << rows.size() << " rows to " << sweep_out << "\n";
        return kExitOk;
    }

    if (predict->parsed()) {
        if (pred_rho) pred_d = std::uint64_t(std::llround(*pred_rho * double(pred_T)));
        const seqwm::PowerPrediction pred =
            seqwm::predict(pred_T, pred_w, pred_m, pred_gamma, pred_p0, pred_d);
        std::cout << pred.to_json() << "\n";
        return kExitOk;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const seqwm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const seqwm::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
