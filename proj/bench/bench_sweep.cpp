// Times the trial sweep serially and with the OpenMP path, checks the two
// produce identical statistics, and reports the speedup. Thread count comes
// from MUIR_THREADS (default: hardware concurrency).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "muir/theory.hpp"

namespace {

double time_batch(const muir::EAParams& p, std::size_t trials, std::uint64_t seed, int threads,
                  muir::TrialBatch& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = muir::run_trials(p, trials, seed, threads);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
    int threads = 0;
    if (const char* v = std::getenv("MUIR_THREADS")) threads = std::atoi(v);
    if (threads < 1) threads = int(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

#ifdef MUIR_HAVE_OPENMP
    std::printf("openmp: enabled, parallel path uses %d thread(s)\n", threads);
#else
    std::printf("openmp: disabled at build time, parallel path runs serially\n");
#endif

    const std::size_t trials = 400;
    int failures = 0;

    struct Case {
        const char* name;
        muir::EAParams p;
    };
    Case cases[3];
    cases[0].name = "uniform L=256 K=8 D=16";
    cases[0].p.L = 256;
    cases[0].p.K = 8;
    cases[0].p.D = 16;
    cases[1].name = "proportional L=1024 full";
    cases[1].p.L = 1024;
    cases[1].p.K = 1024;
    cases[1].p.D = 1024;
    cases[1].p.sampling = muir::SamplingMode::Proportional;
    cases[1].p.init = muir::InitMode::Pessimistic;
    cases[2].name = "uniform L=512 K=4 D=1";
    cases[2].p.L = 512;
    cases[2].p.K = 4;
    cases[2].p.D = 1;

    for (const Case& c : cases) {
        muir::TrialBatch serial, parallel;
        const double ts = time_batch(c.p, trials, 42, 1, serial);
        const double tp = time_batch(c.p, trials, 42, threads, parallel);
        const bool same = serial.iterations == parallel.iterations;
        if (!same) ++failures;
        std::printf("%-28s serial %7.3fs  parallel %7.3fs  speedup %5.2fx  identical %s\n",
                    c.name, ts, tp, tp > 0.0 ? ts / tp : 0.0, same ? "yes" : "NO");
    }

    if (failures > 0) {
        std::printf("FAIL: parallel sweep diverged from the serial reference\n");
        return 1;
    }
    std::printf("parallel path matches the serial reference on all cases\n");
    return 0;
}
