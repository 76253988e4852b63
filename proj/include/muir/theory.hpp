#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "muir/stats.hpp"

namespace muir {

enum class SamplingMode { Uniform, Proportional };
enum class InitMode { UniformRandom, Pessimistic };

// Decomposed (1+lambda)-EA over L locations taking values in {0..K-1}.
// Location ell's target value is 0; fitness splits into D blocks of L/D
// consecutive locations, each block accepting the best of its incumbent and
// lambda mutants (ties keep the incumbent). A mutant resamples each location
// of its block independently with probability D/L, either uniformly over
// {0..K-1} or proportionally to the value counts of the iteration-start
// state. Pessimistic init sets psi(ell) = ell and requires K = L.
struct EAParams {
    std::size_t L = 64;
    std::size_t K = 2;
    std::size_t D = 1;
    std::size_t lambda = 1;
    SamplingMode sampling = SamplingMode::Uniform;
    InitMode init = InitMode::UniformRandom;
    std::uint64_t seed = 0;
    std::size_t max_iters = 10000000;

    void validate() const;
};

struct EATrial {
    std::size_t iterations = 0;
    bool converged = false;
};

// One trial. wrong_trace, if given, receives the wrong-location count before
// any iteration (index 0) and after each iteration.
EATrial run_ea_trial(const EAParams& params, std::vector<std::size_t>* wrong_trace = nullptr);

struct TrialBatch {
    EAParams params;
    std::size_t trials = 0;
    std::size_t timeouts = 0;
    double mean_iters = 0.0;
    double median_iters = 0.0;
    double std_iters = 0.0;
    std::vector<double> iterations;  // per trial, trial order
};

// Repeated trials with per-trial derived seeds. threads > 1 runs the trial
// loop in parallel (when built with OpenMP); results are identical to the
// serial path regardless of thread count.
TrialBatch run_trials(const EAParams& params, std::size_t trials, std::uint64_t base_seed,
                      int threads = 1);

// Mean wrong-location count after t iterations for the L-module pessimistic
// proportional chain, closed form L * ((L-1)/L)^(2^t).
double expected_wrong_closed(double L, std::size_t t);
// Same quantity via the squaring recurrence W <- W^2 / L from W_0 = L - 1.
double expected_wrong_recurrence(double L, std::size_t t);

LinearFit fit_scaling(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace muir
