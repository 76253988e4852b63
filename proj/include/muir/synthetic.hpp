#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "muir/adam.hpp"
#include "muir/alignment.hpp"
#include "muir/array.hpp"
#include "muir/bank.hpp"

namespace muir {

// Grouped linear-regression benchmark: `groups` directions in R^dim, each
// shared by `tasks_per_group` tasks whose true weights differ only by a
// positive scalar. Directions are drawn Gaussian then orthonormalized so
// distinct groups are exactly uncorrelated.
struct SyntheticConfig {
    std::uint64_t seed = 0;
    std::size_t dim = 20;
    std::size_t groups = 3;
    std::size_t tasks_per_group = 10;
    std::size_t n_train = 10;
    std::size_t n_val = 5;
    std::size_t n_test = 50;
    double alpha_min = 0.7;
    double alpha_max = 2.7;
    bool noisy = false;
    double noise_sigma = 0.35;

    std::size_t task_count() const { return groups * tasks_per_group; }
    void validate() const;
};

struct SyntheticTask {
    Array w;  // true weights, alpha * direction(group)
    int group = 0;
    double alpha = 0.0;
    Array x_train, y_train;
    Array x_val, y_val;
    Array x_test, y_test;
};

struct SyntheticTaskSet {
    SyntheticConfig config;
    std::vector<Array> directions;  // orthonormal, one per group
    std::vector<SyntheticTask> tasks;

    std::vector<int> group_labels() const;
};

SyntheticTaskSet generate_synthetic(const SyntheticConfig& cfg);

// Per-task contribution: +1 if the task's module is shared and all sharers
// are in the task's group, 0 if unshared, -1 if shared across groups.
int grouping_score(const std::vector<int>& psi, const std::vector<int>& groups);

// Mean over tasks of the test-split RMSE of the constant-zero predictor.
double zero_predictor_rmse(const SyntheticTaskSet& ts);

// Plain-training protocol shared by STL and Oracle: full-batch Adam with
// periodic validation, early stop on stalled val RMSE, best weights restored.
struct TrainConfig {
    std::size_t max_steps = 20000;
    std::size_t eval_every = 100;
    std::size_t patience = 20;  // evaluations without improvement
    double lr = 1e-3;
};

// One joint model over the task set: one 20x1 block location per task,
// generated from the shared bank (c=1), contexts and modules trained jointly.
struct JointModel {
    Bank bank;
    std::vector<int> psi;
    std::map<int, AdamState> opt_h;
    std::vector<AdamState> opt_z;
};

JointModel make_pessimistic_model(const SyntheticTaskSet& ts, std::uint64_t seed);
JointModel make_oracle_model(const SyntheticTaskSet& ts, std::uint64_t seed);

// One full-batch Adam step on the joint loss (mean over tasks of train MSE)
// with blocks generated straight from psi. Returns the loss.
double plain_step(JointModel& model, const SyntheticTaskSet& ts);

// Per-task validation / test RMSE under the current parameters.
std::vector<double> eval_split_rmse(const JointModel& model, const SyntheticTaskSet& ts,
                                    bool test_split);

struct GenerationRecord {
    std::size_t gen = 0;
    double val_rmse = 0.0;
    int score = 0;
    std::size_t active_modules = 0;
    std::size_t params_reparam = 0;
    std::vector<int> psi;
    std::vector<double> per_task_val;
};

struct SetupResult {
    std::vector<double> per_task_test_rmse;
    double mean_test_rmse = 0.0;
    double median_test_rmse = 0.0;
    std::vector<int> psi;  // final alignment; empty for STL
    std::vector<GenerationRecord> history;
    long first_perfect_gen = -1;  // first generation at the maximum grouping score
    bool stayed_perfect = false;  // score never dropped after reaching it
    long best_gen = -1;           // generation whose snapshot was restored
    Bank final_bank;              // post-training bank; STL has none
    bool has_final_bank = false;
};

SetupResult run_stl(const SyntheticTaskSet& ts, const TrainConfig& tc);
SetupResult run_oracle(const SyntheticTaskSet& ts, const TrainConfig& tc, std::uint64_t seed);
SetupResult run_muir_synthetic(const SyntheticTaskSet& ts, const MuirConfig& cfg);
SetupResult run_random_synthetic(const SyntheticTaskSet& ts, const MuirConfig& cfg);

}  // namespace muir
