#include "muir/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "muir/errors.hpp"

namespace muir {

void MuirConfig::validate() const {
    if (!(p > 0.0) || p > 1.0) throw config_error("p must be in (0, 1]");
    if (!(lr_s > 0.0)) throw config_error("lr_s must be positive");
    if (eps < 0.0 || eps >= 1.0) throw config_error("eps must be in [0, 1)");
    if (lambda > 0) {
        const double a = alpha_value();
        if (!(a > 0.0) || !(a < 1.0)) throw config_error("alpha must be in (0, 1)");
    }
}

Array init_soft_weights(std::size_t lambda, double alpha) {
    Array s({lambda + 1});
    if (lambda == 0) return s;  // degenerate: the incumbent is the only slot
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw config_error("alpha must be in (0, 1)");
    s[0] = 0.0;
    const double v = std::log(alpha) - std::log(double(lambda)) - std::log1p(-alpha);
    for (std::size_t i = 1; i <= lambda; ++i) s[i] = v;
    return s;
}

int proportional_sample(const std::vector<int>& psi0, std::size_t used_count,
                        std::size_t max_modules, double eps, Rng& rng) {
    if (psi0.empty()) throw contract_error("proportional_sample: empty mapping");
    if (used_count < max_modules && eps > 0.0 && rng.uniform() < eps) return -1;
    return psi0[rng.below(psi0.size())];
}

AlignmentState make_alignment_state(const std::vector<int>& psi0, const MuirConfig& cfg) {
    cfg.validate();
    if (psi0.empty()) throw contract_error("alignment state needs at least one location");
    AlignmentState st;
    st.psi0 = psi0;
    st.candidates.assign(cfg.lambda, psi0);
    st.s = Array({psi0.size(), cfg.lambda + 1});
    const Array row = init_soft_weights(cfg.lambda, cfg.alpha_value());
    for (std::size_t ell = 0; ell < psi0.size(); ++ell)
        for (std::size_t j = 0; j <= cfg.lambda; ++j) st.s.at2(ell, j) = row[j];
    return st;
}

void propose_candidates(AlignmentState& st, Bank& bank, const MuirConfig& cfg,
                        std::size_t max_modules, Rng& rng) {
    const std::size_t L = st.psi0.size();
    const Array row = init_soft_weights(cfg.lambda, cfg.alpha_value());
    for (std::size_t ell = 0; ell < L; ++ell)
        for (std::size_t j = 0; j <= cfg.lambda; ++j) st.s.at2(ell, j) = row[j];
    for (std::size_t i = 0; i < cfg.lambda; ++i) st.candidates[i] = st.psi0;

    std::set<int> used(st.psi0.begin(), st.psi0.end());
    const std::size_t used_count = used.size();

    const std::size_t k = static_cast<std::size_t>(std::ceil(cfg.p * double(L)));
    st.perturbed = rng.sample_without_replacement(L, std::min(k, L));

    for (std::size_t ell : st.perturbed) {
        const std::size_t fan_in = bank.locations()[ell].fan_in;
        for (std::size_t i = 0; i < cfg.lambda; ++i) {
            int pick = proportional_sample(st.psi0, used_count, max_modules, cfg.eps, rng);
            if (pick < 0) pick = bank.spawn_module(rng, fan_in);
            st.candidates[i][ell] = pick;
        }
    }
    ++st.generation;
}

std::vector<double> score_candidates(const std::vector<double>& logits,
                                     const std::vector<int>& slot_modules) {
    if (logits.size() != slot_modules.size())
        throw contract_error("score_candidates: logits/slots length mismatch");
    const std::size_t n = logits.size();
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> probs(n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        probs[j] = std::exp(logits[j] - mx);
        z += probs[j];
    }
    for (auto& v : probs) v /= z;
    std::vector<double> score(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (slot_modules[j] == slot_modules[i]) score[i] += probs[j];
    return score;
}

namespace {

std::vector<int> sweep_unused(Bank& bank) {
    std::vector<int> dead;
    for (const auto& [id, mod] : bank.modules())
        if (mod.usage == 0) dead.push_back(id);
    for (int id : dead) bank.remove_module(id);
    return dead;
}

}  // namespace

std::vector<int> commit_selection(AlignmentState& st, Bank& bank) {
    const std::size_t slots = st.candidates.size() + 1;
    for (std::size_t ell : st.perturbed) {
        std::vector<double> logits(slots);
        std::vector<int> mods(slots);
        for (std::size_t j = 0; j < slots; ++j) {
            logits[j] = st.s.at2(ell, j);
            mods[j] = st.slot_module(ell, j);
        }
        const std::vector<double> score = score_candidates(logits, mods);
        std::size_t best = 0;
        for (std::size_t j = 1; j < slots; ++j)
            if (score[j] > score[best]) best = j;
        const int chosen = mods[best];
        if (chosen != st.psi0[ell]) {
            bank.adjust_usage(st.psi0[ell], chosen);
            st.psi0[ell] = chosen;
        }
    }
    return sweep_unused(bank);
}

std::vector<int> commit_random(AlignmentState& st, Bank& bank, Rng& rng) {
    const std::size_t slots = st.candidates.size() + 1;
    for (std::size_t ell : st.perturbed) {
        const std::size_t j = rng.below(slots);
        const int chosen = st.slot_module(ell, j);
        if (chosen != st.psi0[ell]) {
            bank.adjust_usage(st.psi0[ell], chosen);
            st.psi0[ell] = chosen;
        }
    }
    return sweep_unused(bank);
}

}  // namespace muir
