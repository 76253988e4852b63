#include "muir/theory.hpp"

#include <algorithm>
#include <cmath>

#ifdef MUIR_HAVE_OPENMP
#include <omp.h>
#endif

#include "muir/errors.hpp"
#include "muir/rng.hpp"

namespace muir {

void EAParams::validate() const {
    if (L == 0) throw config_error("L must be >= 1");
    if (K == 0) throw config_error("K must be >= 1");
    if (D == 0 || L % D != 0) throw config_error("D must divide L");
    if (lambda == 0) throw config_error("lambda must be >= 1");
    if (init == InitMode::Pessimistic && K != L)
        throw config_error("pessimistic init requires K = L");
}

namespace {

struct Change {
    std::size_t loc;
    std::size_t value;
};

}  // namespace

EATrial run_ea_trial(const EAParams& params, std::vector<std::size_t>* wrong_trace) {
    params.validate();
    Rng rng(params.seed);
    const std::size_t L = params.L, K = params.K, D = params.D;
    const std::size_t block = L / D;
    const double hit_p = double(D) / double(L);

    std::vector<std::size_t> psi(L);
    if (params.init == InitMode::Pessimistic) {
        for (std::size_t ell = 0; ell < L; ++ell) psi[ell] = ell;
    } else {
        for (std::size_t ell = 0; ell < L; ++ell) psi[ell] = rng.below(K);
    }
    std::size_t correct = 0;
    for (std::size_t ell = 0; ell < L; ++ell)
        if (psi[ell] == 0) ++correct;

    if (wrong_trace) {
        wrong_trace->clear();
        wrong_trace->push_back(L - correct);
    }

    std::vector<std::size_t> snapshot;
    std::vector<Change> changes, best_changes;
    const double log_miss = (hit_p < 1.0) ? std::log1p(-hit_p) : 0.0;

    EATrial trial;
    while (correct < L && trial.iterations < params.max_iters) {
        if (params.sampling == SamplingMode::Proportional) snapshot = psi;
        auto sample_value = [&]() -> std::size_t {
            if (params.sampling == SamplingMode::Uniform) return rng.below(K);
            return snapshot[rng.below(L)];
        };

        for (std::size_t d = 0; d < D; ++d) {
            const std::size_t lo = d * block;
            long best_delta = 0;
            best_changes.clear();
            for (std::size_t i = 0; i < params.lambda; ++i) {
                changes.clear();
                long delta = 0;
                if (hit_p >= 1.0) {
                    for (std::size_t ell = lo; ell < lo + block; ++ell) {
                        const std::size_t v = sample_value();
                        if (v == psi[ell]) continue;
                        delta += long(v == 0) - long(psi[ell] == 0);
                        changes.push_back({ell, v});
                    }
                } else {
                    // Geometric skipping over the block's positions.
                    double pos = -1.0;
                    for (;;) {
                        const double u = rng.uniform();
                        pos += 1.0 + std::floor(std::log(1.0 - u) / log_miss);
                        if (pos >= double(block)) break;
                        const std::size_t ell = lo + std::size_t(pos);
                        const std::size_t v = sample_value();
                        if (v == psi[ell]) continue;
                        delta += long(v == 0) - long(psi[ell] == 0);
                        changes.push_back({ell, v});
                    }
                }
                if (delta > best_delta) {
                    best_delta = delta;
                    best_changes.swap(changes);
                }
            }
            for (const Change& ch : best_changes) {
                correct += std::size_t(ch.value == 0) - std::size_t(psi[ch.loc] == 0);
                psi[ch.loc] = ch.value;
            }
        }
        ++trial.iterations;
        if (wrong_trace) wrong_trace->push_back(L - correct);
    }
    trial.converged = (correct == L);
    return trial;
}

TrialBatch run_trials(const EAParams& params, std::size_t trials, std::uint64_t base_seed,
                      int threads) {
    params.validate();
    TrialBatch batch;
    batch.params = params;
    batch.trials = trials;
    batch.iterations.resize(trials);
    std::vector<unsigned char> ok(trials, 0);

    auto body = [&](std::size_t t) {
        EAParams p = params;
        p.seed = derive_stream(base_seed, t);
        const EATrial r = run_ea_trial(p);
        batch.iterations[t] = double(r.iterations);
        ok[t] = r.converged ? 1 : 0;
    };

#ifdef MUIR_HAVE_OPENMP
    if (threads > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (long long t = 0; t < (long long)trials; ++t) body(std::size_t(t));
    } else {
        for (std::size_t t = 0; t < trials; ++t) body(t);
    }
#else
    (void)threads;
    for (std::size_t t = 0; t < trials; ++t) body(t);
#endif

    for (std::size_t t = 0; t < trials; ++t)
        if (!ok[t]) ++batch.timeouts;
    if (trials > 0) {
        batch.mean_iters = mean(batch.iterations);
        batch.median_iters = median(batch.iterations);
        batch.std_iters = stddev(batch.iterations);
    }
    return batch;
}

double expected_wrong_closed(double L, std::size_t t) {
    if (L <= 1.0) return 0.0;
    const double e = std::ldexp(1.0, int(std::min<std::size_t>(t, 1023)));
    return L * std::exp(e * std::log1p(-1.0 / L));
}

double expected_wrong_recurrence(double L, std::size_t t) {
    if (L <= 1.0) return 0.0;
    double w = L - 1.0;
    for (std::size_t i = 0; i < t; ++i) w = w * w / L;
    return w;
}

LinearFit fit_scaling(const std::vector<double>& xs, const std::vector<double>& ys) {
    return linear_fit(xs, ys);
}

}  // namespace muir
