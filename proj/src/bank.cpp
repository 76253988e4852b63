#include "muir/bank.hpp"

#include <algorithm>
#include <cmath>

#include "muir/errors.hpp"
#include "muir/stats.hpp"
#include "muir/tape.hpp"

namespace muir {

Bank Bank::init_bank(const std::vector<PseudoTaskLocation>& locations, BankConfig config,
                     Rng& rng) {
    if (locations.empty()) throw config_error("init_bank: no locations");
    for (const auto& loc : locations)
        if (loc.fan_in == 0) throw config_error("init_bank: zero fan_in at location");
    Bank bank(config, locations);
    bank.contexts_.reserve(locations.size());
    for (const auto& loc : locations) {
        const int id = bank.spawn_module(rng, loc.fan_in);
        bank.modules_[id].usage = 1;
        if (config.exact_sharing()) {
            bank.contexts_.emplace_back(std::vector<std::size_t>{0});
        } else {
            Array z({config.c});
            z.fill(bank.context_constant(loc.fan_in));
            bank.contexts_.push_back(std::move(z));
        }
    }
    return bank;
}

Hypermodule& Bank::module(int id) {
    auto it = modules_.find(id);
    if (it == modules_.end())
        throw integrity_error("bank: dangling module id " + std::to_string(id));
    return it->second;
}

const Hypermodule& Bank::module(int id) const {
    auto it = modules_.find(id);
    if (it == modules_.end())
        throw integrity_error("bank: dangling module id " + std::to_string(id));
    return it->second;
}

int Bank::spawn_module(Rng& rng, std::size_t fan_in) {
    Hypermodule h;
    h.id = next_id_++;
    if (config_.exact_sharing()) {
        const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
        h.tensor = Array({config_.m, config_.n});
        for (std::size_t i = 0; i < h.tensor.size(); ++i) h.tensor[i] = rng.normal(0.0, sigma);
    } else {
        h.tensor = Array({config_.c, config_.m, config_.n});
        const double sh = config_.sigma_h();
        for (std::size_t i = 0; i < h.tensor.size(); ++i) h.tensor[i] = rng.normal(0.0, sh);
    }
    h.usage = 0;
    const int id = h.id;
    modules_.emplace(id, std::move(h));
    return id;
}

void Bank::remove_module(int id) {
    auto it = modules_.find(id);
    if (it == modules_.end()) throw integrity_error("remove_module: unknown id");
    if (it->second.usage != 0) throw integrity_error("remove_module: module still in use");
    modules_.erase(it);
}

double Bank::context_constant(std::size_t fan_in) const {
    if (config_.exact_sharing()) return 0.0;
    const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
    return sigma / (static_cast<double>(config_.c) * config_.sigma_h());
}

Array Bank::generate_block(int module_id, std::size_t ell) const {
    const Hypermodule& h = module(module_id);
    if (config_.exact_sharing()) return h.tensor;
    Tape tape;
    const NodeId hn = tape.constant(h.tensor);
    const NodeId zn = tape.constant(contexts_[ell]);
    return tape.value(tape.mode1(hn, zn));
}

Array Bank::soft_merge_block(const std::vector<int>& module_ids, const Array& s_ell,
                             std::size_t ell) const {
    if (s_ell.size() != module_ids.size())
        throw shape_error("soft_merge_block: beliefs do not match candidate count");
    Tape tape;
    const NodeId probs = tape.softmax(tape.constant(s_ell));
    std::vector<NodeId> blocks;
    blocks.reserve(module_ids.size());
    for (int id : module_ids) blocks.push_back(tape.constant(generate_block(id, ell)));
    return tape.value(tape.weighted_sum(probs, blocks));
}

void Bank::set_usage_from(const std::vector<int>& psi0) {
    if (psi0.size() != locations_.size())
        throw integrity_error("set_usage_from: psi length mismatch");
    for (auto& [id, h] : modules_) h.usage = 0;
    for (int id : psi0) ++module(id).usage;
}

void Bank::adjust_usage(int old_id, int new_id) {
    if (old_id == new_id) return;
    Hypermodule& old_h = module(old_id);
    if (old_h.usage == 0) throw integrity_error("adjust_usage: usage underflow");
    --old_h.usage;
    ++module(new_id).usage;
}

std::size_t Bank::usage_total() const {
    std::size_t total = 0;
    for (const auto& [id, h] : modules_) total += h.usage;
    return total;
}

bool Bank::collapse_pays(std::size_t usage) const {
    const std::size_t mn = config_.m * config_.n;
    if (config_.exact_sharing()) return usage <= 1;
    // materialized cost u*m*n vs kept cost u*c + c*m*n
    return usage * mn <= usage * config_.c + config_.c * mn;
}

Bank::ParameterCounts Bank::parameter_counts(const std::vector<int>& psi0) const {
    const std::size_t mn = config_.m * config_.n;
    const std::size_t L = locations_.size();
    ParameterCounts out;
    out.original = L * mn;
    if (config_.exact_sharing()) {
        out.reparameterized = active_count() * mn;
        out.inference = out.reparameterized;
        return out;
    }
    out.reparameterized = L * config_.c + active_count() * config_.c * mn;
    std::size_t kept = 0;
    for (const auto& [id, h] : modules_) {
        if (h.usage == 0) continue;
        if (!collapse_pays(h.usage)) ++kept;
    }
    std::size_t collapsed_locs = 0;
    for (int id : psi0)
        if (collapse_pays(module(id).usage)) ++collapsed_locs;
    out.collapsed_locations = collapsed_locs;
    out.inference = (L - collapsed_locs) * config_.c + kept * config_.c * mn + collapsed_locs * mn;
    return out;
}

Bank::CollapsedModel Bank::collapse_for_inference(const std::vector<int>& psi0) const {
    CollapsedModel out;
    for (std::size_t ell = 0; ell < psi0.size(); ++ell) {
        const Hypermodule& h = module(psi0[ell]);
        if (collapse_pays(h.usage)) {
            out.materialized.emplace(ell, generate_block(psi0[ell], ell));
        } else {
            out.kept_modules.insert(psi0[ell]);
        }
    }
    return out;
}

Array Bank::collapsed_block(const CollapsedModel& model, const std::vector<int>& psi0,
                            std::size_t ell) const {
    auto it = model.materialized.find(ell);
    if (it != model.materialized.end()) return it->second;
    if (model.kept_modules.count(psi0[ell]) == 0)
        throw integrity_error("collapsed_block: location neither materialized nor kept");
    return generate_block(psi0[ell], ell);
}

Bank Bank::from_parts(BankConfig config, std::vector<PseudoTaskLocation> locations,
                      std::map<int, Hypermodule> modules, std::vector<Array> contexts) {
    if (contexts.size() != locations.size())
        throw integrity_error("from_parts: one context per location required");
    Bank b(config, std::move(locations));
    b.contexts_ = std::move(contexts);
    b.modules_ = std::move(modules);
    for (const auto& [id, h] : b.modules_) {
        if (id < 0 || h.id != id) throw integrity_error("from_parts: inconsistent module ids");
        b.next_id_ = std::max(b.next_id_, id + 1);
    }
    return b;
}

namespace {

struct SummaryPack {
    std::vector<double> stdev, mean_v, l2, max_v;

    void add(const Array& a) {
        double s = 0.0, ss = 0.0, mx = a.size() ? a[0] : 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s += a[i];
            ss += a[i] * a[i];
            mx = std::max(mx, a[i]);
        }
        const double n = double(a.size());
        const double m = s / n;
        const double var = (a.size() > 1) ? std::max(0.0, (ss - n * m * m) / (n - 1.0)) : 0.0;
        stdev.push_back(std::sqrt(var));
        mean_v.push_back(m);
        l2.push_back(std::sqrt(ss));
        max_v.push_back(mx);
    }
};

TensorGroupStats compare_groups(const SummaryPack& gen, const SummaryPack& spec) {
    TensorGroupStats out;
    out.generic_count = gen.mean_v.size();
    out.specific_count = spec.mean_v.size();
    out.p_stdev = mann_whitney(gen.stdev, spec.stdev).p_two_sided;
    out.p_mean = mann_whitney(gen.mean_v, spec.mean_v).p_two_sided;
    out.p_l2 = mann_whitney(gen.l2, spec.l2).p_two_sided;
    out.p_max = mann_whitney(gen.max_v, spec.max_v).p_two_sided;
    return out;
}

}  // namespace

GeneralityReport generality_stats(const Bank& bank, const std::vector<int>& psi) {
    if (psi.size() != bank.location_count())
        throw contract_error("generality_stats: psi length mismatch");
    const std::size_t c = bank.config().exact_sharing() ? 1 : bank.config().c;
    std::map<int, std::size_t> usage;
    for (int id : psi) ++usage[id];

    auto is_generic = [&](int id) { return usage[id] > c; };

    GeneralityReport rep;
    SummaryPack mod_gen, mod_spec, ctx_gen, ctx_spec, map_gen, map_spec;
    for (const auto& [id, count] : usage) {
        (void)count;
        if (is_generic(id)) {
            ++rep.generic_modules;
            mod_gen.add(bank.module(id).tensor);
        } else {
            ++rep.specific_modules;
            mod_spec.add(bank.module(id).tensor);
        }
    }
    for (std::size_t ell = 0; ell < psi.size(); ++ell) {
        const Array block = bank.generate_block(psi[ell], ell);
        if (is_generic(psi[ell])) {
            ctx_gen.add(bank.context(ell));
            map_gen.add(block);
        } else {
            ctx_spec.add(bank.context(ell));
            map_spec.add(block);
        }
    }
    rep.modules = compare_groups(mod_gen, mod_spec);
    rep.contexts = compare_groups(ctx_gen, ctx_spec);
    rep.generated = compare_groups(map_gen, map_spec);
    return rep;
}

}  // namespace muir
