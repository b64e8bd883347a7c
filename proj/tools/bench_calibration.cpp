// Benchmark: wrong-key calibration scored serially vs with the OpenMP
// kernel, across thread counts. The two paths must agree exactly; the
// speedup column is the point of the exercise.
//
// Usage: seqwm_bench [M] [T] [trials]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqwm/calibration.hpp"
#include "seqwm/detector.hpp"
#include "seqwm/encoder.hpp"
#include "seqwm/trajectory_io.hpp"

using namespace seqwm;

namespace {

double time_once(const std::vector<SecretKey>& keys, const ObservedSequence& obs,
                 const WatermarkParams& params, const ScoreFn& score, int jobs,
                 std::vector<std::int64_t>& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = jobs == 0 ? score_under_keys_serial(keys, obs, params, score)
                    : score_under_keys(keys, obs, params, score, jobs);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int M = argc > 1 ? std::atoi(argv[1]) : 400;
    const std::uint64_t T = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 203;
    const int trials = argc > 3 ? std::atoi(argv[3]) : 3;

    PolicySpec policy;
    policy.kind = PolicyKind::Uniform;
    policy.vocabulary = make_vocabulary(10);
    policy.rng_seed = 7;

    WatermarkParams params;
    Rng64 key_rng(42);
    params.key = generate_key(key_rng);

    Rng64 run_rng(1234);
    const Trajectory traj = encode_trajectory(params, policy, T, run_rng);
    const ObservedSequence obs = ObservedSequence::from_trajectory(traj);

    Rng64 cal_rng(99);
    const std::vector<SecretKey> keys = draw_wrong_keys(params.key, M, cal_rng);
    const ScoreFn score = sliding_score_fn();

    std::printf("calibration benchmark: M=%d keys, T=%llu, %d trials per row\n", M,
                (unsigned long long)T, trials);
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
#else
    const int max_threads = 1;
    std::printf("(built without OpenMP: parallel rows fall back to serial)\n");
#endif

    std::vector<std::int64_t> reference;
    double serial_best = 1e300;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::int64_t> out;
        const double s = time_once(keys, obs, params, score, 0, out);
        if (t == 0) reference = out;
        if (s < serial_best) serial_best = s;
    }
    std::printf("%-10s %10.4fs   %8.1f keys/s   speedup %.2fx\n", "serial", serial_best,
                M / serial_best, 1.0);

    for (int jobs = 1; jobs <= max_threads; jobs *= 2) {
        std::vector<std::int64_t> out;
        double best = 1e300;
        for (int t = 0; t < trials; ++t) {
            const double s = time_once(keys, obs, params, score, jobs, out);
            if (s < best) best = s;
        }
        if (out != reference) {
            std::printf("MISMATCH at jobs=%d: parallel kernel disagrees with serial reference\n",
                        jobs);
            return 1;
        }
        std::printf("jobs=%-5d %10.4fs   %8.1f keys/s   speedup %.2fx\n", jobs, best, M / best,
                    serial_best / best);
    }
    std::printf("parallel kernel matches the serial reference on all rows\n");
    return 0;
}
