#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "muir/array.hpp"
#include "muir/bank.hpp"
#include "muir/rng.hpp"

namespace muir {

// Alignment search hyperparameters. Defaults are the pinned values used
// throughout; alpha < 0 means "derive from lambda" (lambda candidates plus
// the incumbent, uniform merge weights at initialization).
struct MuirConfig {
    std::size_t lambda = 8;     // candidates per location per generation
    double p = 0.5;             // fraction of locations perturbed per generation
    double lr_s = 0.01;         // Adam learning rate for merge logits
    std::size_t n_init = 0;     // plain training steps before the search
    std::size_t n_iter = 100;   // merged training steps per generation
    std::size_t n_gen = 200;    // generation cap
    std::size_t n_final = 2000; // plain training steps after revert
    double alpha = -1.0;        // incumbent preservation mass; <0 -> lambda/(lambda+1)
    double eps = 1e-4;          // new-module proposal probability
    std::size_t patience = 50;  // generations without val improvement before stop
    std::uint64_t seed = 0;

    double alpha_value() const { return alpha >= 0.0 ? alpha : double(lambda) / double(lambda + 1); }
    void validate() const;
};

// Per-location merge logits at the start of a generation: slot 0 is the
// incumbent and receives total softmax mass alpha, the lambda candidate slots
// split the rest evenly. s_0 = 0, s_i = ln(alpha) - ln(lambda) - ln(1 - alpha).
// At the default alpha = lambda / (lambda + 1) this is the zero vector.
Array init_soft_weights(std::size_t lambda, double alpha);

// Usage-proportional draw over the modules referenced by psi0, with an
// eps-chance of proposing a fresh module while fewer than max_modules are in
// use. Returns a module id, or -1 to signal "spawn new".
int proportional_sample(const std::vector<int>& psi0, std::size_t used_count,
                        std::size_t max_modules, double eps, Rng& rng);

struct AlignmentState {
    std::vector<int> psi0;                    // incumbent mapping, one module id per location
    std::vector<std::vector<int>> candidates; // lambda rows, each of length L
    Array s;                                  // L x (lambda + 1) merge logits
    std::vector<std::size_t> perturbed;       // locations touched this generation
    std::size_t generation = 0;

    // Slot j at location ell: 0 = incumbent, 1..lambda = candidate rows.
    int slot_module(std::size_t ell, std::size_t j) const {
        return j == 0 ? psi0[ell] : candidates[j - 1][ell];
    }
};

AlignmentState make_alignment_state(const std::vector<int>& psi0, const MuirConfig& cfg);

// Start a generation: reset merge logits, pick ceil(p * L) distinct locations,
// and fill candidate rows. Unperturbed locations keep the incumbent in every
// slot; perturbed ones get lambda independent proportional draws each. Fresh
// modules are spawned in the bank (usage 0 until committed). max_modules caps
// the number of distinct in-use modules new proposals may grow toward.
void propose_candidates(AlignmentState& st, Bank& bank, const MuirConfig& cfg,
                        std::size_t max_modules, Rng& rng);

// Duplicate-aware scores: score of slot i is the total softmax mass of all
// slots holding the same module as slot i.
std::vector<double> score_candidates(const std::vector<double>& logits,
                                     const std::vector<int>& slot_modules);

// Commit the best-scoring module at every perturbed location (ties break
// toward the incumbent slot, then the lowest slot index), update bank usage,
// and delete modules left with zero usage. Returns the ids deleted so the
// caller can drop their optimizer states.
std::vector<int> commit_selection(AlignmentState& st, Bank& bank);

// Same loop shape with the scores ignored: every perturbed location commits a
// uniformly random slot. Control arm for the search.
std::vector<int> commit_random(AlignmentState& st, Bank& bank, Rng& rng);

}  // namespace muir
