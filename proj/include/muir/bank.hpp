#pragma once

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "muir/array.hpp"
#include "muir/decompose.hpp"
#include "muir/rng.hpp"

namespace muir {

struct BankConfig {
    std::size_t c = 1;
    std::size_t m = 1;
    std::size_t n = 1;
    // c == 0 selects exact sharing: modules store raw m x n blocks and
    // contexts disappear.
    bool exact_sharing() const { return c == 0; }
    // Default sigma_H is He-style in the contraction dimension (2/c). A
    // positive override replaces it (the variance identity c*z*sigma_H =
    // sigma then fixes z either way).
    double sigma_h_override = -1.0;
    double sigma_h() const {
        if (exact_sharing()) return 0.0;
        return sigma_h_override > 0.0 ? sigma_h_override
                                      : std::sqrt(2.0 / static_cast<double>(c));
    }
};

struct Hypermodule {
    int id = 0;
    Array tensor;            // c x m x n, or m x n in exact-sharing mode
    std::size_t usage = 0;   // |{l : psi0(l) = id}|
};

// Owns hypermodule tensors and per-location contexts. Alignment state lives
// elsewhere; usage counts here are maintained by the alignment commits.
class Bank {
  public:
    Bank() = default;
    Bank(BankConfig config, std::vector<PseudoTaskLocation> locations)
        : config_(config), locations_(std::move(locations)) {}

    // Pessimistic initialization: one fresh module per location, context set
    // to the constant z with c*z*sigma_H = sigma(l), sigma(l)^2 = 2/fan_in.
    static Bank init_bank(const std::vector<PseudoTaskLocation>& locations, BankConfig config,
                          Rng& rng);

    // Rebuild from saved state (checkpoint loading).
    static Bank from_parts(BankConfig config, std::vector<PseudoTaskLocation> locations,
                           std::map<int, Hypermodule> modules, std::vector<Array> contexts);

    const BankConfig& config() const { return config_; }
    const std::vector<PseudoTaskLocation>& locations() const { return locations_; }
    std::size_t location_count() const { return locations_.size(); }

    std::map<int, Hypermodule>& modules() { return modules_; }
    const std::map<int, Hypermodule>& modules() const { return modules_; }
    Hypermodule& module(int id);
    const Hypermodule& module(int id) const;
    bool has_module(int id) const { return modules_.count(id) != 0; }
    std::size_t active_count() const { return modules_.size(); }

    Array& context(std::size_t ell) { return contexts_[ell]; }
    const Array& context(std::size_t ell) const { return contexts_[ell]; }

    // Fresh module initialized as in init_bank; used by the epsilon-NEW
    // path. fan_in is the target location's (it only matters in exact-sharing
    // mode, where blocks are drawn at the location's He scale directly).
    int spawn_module(Rng& rng, std::size_t fan_in);
    void remove_module(int id);

    double context_constant(std::size_t fan_in) const;

    // Mode-1 product of the module tensor with the location's context (or the
    // stored block verbatim in exact-sharing mode).
    Array generate_block(int module_id, std::size_t ell) const;
    // Softmax-weighted merge forward (non-differentiable convenience; training
    // uses the tape).
    Array soft_merge_block(const std::vector<int>& module_ids, const Array& s_ell,
                           std::size_t ell) const;

    void set_usage_from(const std::vector<int>& psi0);
    void adjust_usage(int old_id, int new_id);
    std::size_t usage_total() const;

    struct ParameterCounts {
        std::size_t original = 0;        // L*m*n
        std::size_t reparameterized = 0; // L*c + K_active*c*m*n
        std::size_t inference = 0;       // after collapsing non-paying modules
        std::size_t collapsed_locations = 0;
    };
    ParameterCounts parameter_counts(const std::vector<int>& psi0) const;

    // A module pays for itself at inference only if keeping it (one c*m*n
    // tensor plus a length-c context per use) costs no more than
    // materializing its blocks (m*n per use).
    bool collapse_pays(std::size_t usage) const;

    struct CollapsedModel {
        std::map<std::size_t, Array> materialized;  // ell -> raw block
        std::set<int> kept_modules;
    };
    CollapsedModel collapse_for_inference(const std::vector<int>& psi0) const;
    // Block the collapsed model uses at ell (materialized or generated).
    Array collapsed_block(const CollapsedModel& model, const std::vector<int>& psi0,
                          std::size_t ell) const;

  private:
    BankConfig config_;
    std::vector<PseudoTaskLocation> locations_;
    std::map<int, Hypermodule> modules_;
    std::vector<Array> contexts_;
    int next_id_ = 0;
};

// Generic/specific partition summary. A module is generic when its usage
// under psi exceeds c; contexts and generated blocks inherit the label of
// their location's module. For each tensor the scalar summaries are stdev,
// mean, L2 norm, and max; p-values are two-sided Mann-Whitney comparisons of
// generic vs specific summaries (NaN when either side is empty).
struct TensorGroupStats {
    std::size_t generic_count = 0;
    std::size_t specific_count = 0;
    double p_stdev = 0.0, p_mean = 0.0, p_l2 = 0.0, p_max = 0.0;
};

struct GeneralityReport {
    std::size_t generic_modules = 0;
    std::size_t specific_modules = 0;
    TensorGroupStats modules, contexts, generated;
};

GeneralityReport generality_stats(const Bank& bank, const std::vector<int>& psi);

}  // namespace muir
