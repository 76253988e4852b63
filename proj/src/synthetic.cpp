#include "muir/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "muir/errors.hpp"
#include "muir/rng.hpp"
#include "muir/stats.hpp"
#include "muir/tape.hpp"

namespace muir {

void SyntheticConfig::validate() const {
    if (dim == 0 || groups == 0 || tasks_per_group == 0)
        throw config_error("synthetic: dim, groups, tasks_per_group must be >= 1");
    if (groups > dim) throw config_error("synthetic: need groups <= dim for orthonormal directions");
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw config_error("synthetic: all splits must be non-empty");
    if (!(alpha_min <= alpha_max)) throw config_error("synthetic: alpha_min > alpha_max");
    if (noise_sigma < 0.0) throw config_error("synthetic: negative noise_sigma");
}

std::vector<int> SyntheticTaskSet::group_labels() const {
    std::vector<int> g(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) g[t] = tasks[t].group;
    return g;
}

namespace {

Array draw_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Array x({rows, cols});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    return x;
}

Array targets(const Array& x, const Array& w, bool noisy, double sigma, Rng& rng) {
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    Array y({n});
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += x.at2(i, j) * w[j];
        y[i] = acc;
    }
    if (noisy)
        for (std::size_t i = 0; i < n; ++i) y[i] += sigma * rng.normal();
    return y;
}

}  // namespace

SyntheticTaskSet generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SyntheticTaskSet ts;
    ts.config = cfg;

    // Gaussian directions, Gram-Schmidt orthonormalized.
    std::vector<Array> dirs;
    for (std::size_t g = 0; g < cfg.groups; ++g) {
        Array v({cfg.dim});
        for (std::size_t d = 0; d < cfg.dim; ++d) v[d] = rng.normal();
        for (const Array& u : dirs) {
            double proj = 0.0;
            for (std::size_t d = 0; d < cfg.dim; ++d) proj += v[d] * u[d];
            for (std::size_t d = 0; d < cfg.dim; ++d) v[d] -= proj * u[d];
        }
        double norm = 0.0;
        for (std::size_t d = 0; d < cfg.dim; ++d) norm += v[d] * v[d];
        norm = std::sqrt(norm);
        if (norm < 1e-9) throw integrity_error("degenerate group directions");
        for (std::size_t d = 0; d < cfg.dim; ++d) v[d] /= norm;
        dirs.push_back(std::move(v));
    }
    ts.directions = dirs;

    for (std::size_t g = 0; g < cfg.groups; ++g) {
        for (std::size_t i = 0; i < cfg.tasks_per_group; ++i) {
            SyntheticTask task;
            task.group = int(g);
            task.alpha = cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * rng.uniform();
            task.w = Array({cfg.dim});
            for (std::size_t d = 0; d < cfg.dim; ++d) task.w[d] = task.alpha * dirs[g][d];
            task.x_train = draw_matrix(rng, cfg.n_train, cfg.dim);
            task.y_train = targets(task.x_train, task.w, cfg.noisy, cfg.noise_sigma, rng);
            task.x_val = draw_matrix(rng, cfg.n_val, cfg.dim);
            task.y_val = targets(task.x_val, task.w, cfg.noisy, cfg.noise_sigma, rng);
            task.x_test = draw_matrix(rng, cfg.n_test, cfg.dim);
            task.y_test = targets(task.x_test, task.w, cfg.noisy, cfg.noise_sigma, rng);
            ts.tasks.push_back(std::move(task));
        }
    }
    return ts;
}

int grouping_score(const std::vector<int>& psi, const std::vector<int>& groups) {
    if (psi.size() != groups.size()) throw contract_error("grouping_score: length mismatch");
    std::map<int, std::vector<int>> users;
    for (std::size_t t = 0; t < psi.size(); ++t) users[psi[t]].push_back(groups[t]);
    int score = 0;
    for (std::size_t t = 0; t < psi.size(); ++t) {
        const std::vector<int>& u = users[psi[t]];
        if (u.size() <= 1) continue;
        bool same = true;
        for (int g : u)
            if (g != groups[t]) { same = false; break; }
        score += same ? 1 : -1;
    }
    return score;
}

double zero_predictor_rmse(const SyntheticTaskSet& ts) {
    std::vector<double> per_task;
    for (const SyntheticTask& task : ts.tasks) {
        double acc = 0.0;
        for (std::size_t i = 0; i < task.y_test.size(); ++i) acc += task.y_test[i] * task.y_test[i];
        per_task.push_back(std::sqrt(acc / double(task.y_test.size())));
    }
    return mean(per_task);
}

namespace {

std::vector<PseudoTaskLocation> task_locations(const SyntheticTaskSet& ts) {
    std::vector<PseudoTaskLocation> locs;
    for (std::size_t t = 0; t < ts.tasks.size(); ++t) {
        PseudoTaskLocation loc;
        loc.ell = t;
        loc.layer_id = t;
        loc.slot = 0;
        loc.bi = 0;
        loc.bj = 0;
        loc.fan_in = ts.config.dim;
        locs.push_back(loc);
    }
    return locs;
}

BankConfig task_bank_config(const SyntheticTaskSet& ts) {
    BankConfig bc;
    bc.c = 1;
    bc.m = ts.config.dim;
    bc.n = 1;
    bc.sigma_h_override = std::sqrt(2.0 / double(ts.config.dim));
    return bc;
}

double predict_rmse(const Array& x, const Array& y, const Array& block) {
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    if (block.size() != d) throw shape_error("predict: block size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (std::size_t j = 0; j < d; ++j) pred += x.at2(i, j) * block[j];
        const double r = pred - y[i];
        acc += r * r;
    }
    return std::sqrt(acc / double(n));
}

}  // namespace

JointModel make_pessimistic_model(const SyntheticTaskSet& ts, std::uint64_t seed) {
    Rng rng(seed);
    JointModel m;
    m.bank = Bank::init_bank(task_locations(ts), task_bank_config(ts), rng);
    m.psi.resize(ts.tasks.size());
    int id = 0;
    for (const auto& [mid, mod] : m.bank.modules()) {
        (void)mod;
        m.psi[std::size_t(id)] = mid;
        ++id;
    }
    m.bank.set_usage_from(m.psi);
    for (const auto& [mid, mod] : m.bank.modules())
        m.opt_h.emplace(mid, AdamState(mod.tensor.shape()));
    for (std::size_t t = 0; t < ts.tasks.size(); ++t)
        m.opt_z.emplace_back(m.bank.context(t).shape());
    return m;
}

JointModel make_oracle_model(const SyntheticTaskSet& ts, std::uint64_t seed) {
    Rng rng(seed);
    JointModel m;
    m.bank = Bank::init_bank(task_locations(ts), task_bank_config(ts), rng);
    std::map<int, int> group_module;
    for (std::size_t g = 0; g < ts.config.groups; ++g)
        group_module[int(g)] = m.bank.spawn_module(rng, ts.config.dim);
    m.psi.resize(ts.tasks.size());
    for (std::size_t t = 0; t < ts.tasks.size(); ++t) m.psi[t] = group_module[ts.tasks[t].group];
    m.bank.set_usage_from(m.psi);
    std::vector<int> dead;
    for (const auto& [mid, mod] : m.bank.modules())
        if (mod.usage == 0) dead.push_back(mid);
    for (int mid : dead) m.bank.remove_module(mid);
    for (const auto& [mid, mod] : m.bank.modules())
        m.opt_h.emplace(mid, AdamState(mod.tensor.shape()));
    for (std::size_t t = 0; t < ts.tasks.size(); ++t)
        m.opt_z.emplace_back(m.bank.context(t).shape());
    return m;
}

double plain_step(JointModel& m, const SyntheticTaskSet& ts) {
    const std::size_t T = ts.tasks.size();
    Tape tape;
    std::map<int, NodeId> hn;
    for (int id : m.psi)
        if (!hn.count(id)) hn[id] = tape.leaf(m.bank.module(id).tensor);
    std::vector<NodeId> zn(T);
    for (std::size_t t = 0; t < T; ++t) zn[t] = tape.leaf(m.bank.context(t));
    std::vector<NodeId> losses;
    for (std::size_t t = 0; t < T; ++t) {
        const NodeId block = tape.mode1(hn[m.psi[t]], zn[t]);
        const NodeId pred = tape.matvec(tape.constant(ts.tasks[t].x_train), block);
        losses.push_back(tape.mse(pred, tape.constant(ts.tasks[t].y_train)));
    }
    const NodeId total = tape.scale(tape.add_n(losses), 1.0 / double(T));
    tape.backward(total);
    for (const auto& [id, node] : hn)
        m.opt_h.at(id).step(m.bank.module(id).tensor, tape.grad(node));
    for (std::size_t t = 0; t < T; ++t) m.opt_z[t].step(m.bank.context(t), tape.grad(zn[t]));
    return tape.value(total)[0];
}

std::vector<double> eval_split_rmse(const JointModel& m, const SyntheticTaskSet& ts,
                                    bool test_split) {
    std::vector<double> out;
    for (std::size_t t = 0; t < ts.tasks.size(); ++t) {
        const Array block = m.bank.generate_block(m.psi[t], t);
        const SyntheticTask& task = ts.tasks[t];
        out.push_back(test_split ? predict_rmse(task.x_test, task.y_test, block)
                                 : predict_rmse(task.x_val, task.y_val, block));
    }
    return out;
}

namespace {

// Training-phase step of the search: every location's block is the
// softmax-weighted merge of its candidate slots.
double merged_step(JointModel& m, AlignmentState& st, const SyntheticTaskSet& ts,
                   AdamState& opt_s) {
    const std::size_t T = ts.tasks.size();
    const std::size_t slots = st.candidates.size() + 1;
    Tape tape;
    std::map<int, NodeId> hn;
    for (std::size_t ell = 0; ell < T; ++ell)
        for (std::size_t j = 0; j < slots; ++j) {
            const int id = st.slot_module(ell, j);
            if (!hn.count(id)) hn[id] = tape.leaf(m.bank.module(id).tensor);
        }
    std::vector<NodeId> zn(T);
    for (std::size_t t = 0; t < T; ++t) zn[t] = tape.leaf(m.bank.context(t));
    std::vector<NodeId> s_rows(T);
    std::vector<NodeId> losses;
    for (std::size_t t = 0; t < T; ++t) {
        Array row({slots});
        for (std::size_t j = 0; j < slots; ++j) row[j] = st.s.at2(t, j);
        s_rows[t] = tape.leaf(std::move(row));
        const NodeId probs = tape.softmax(s_rows[t]);
        std::vector<NodeId> blocks(slots);
        for (std::size_t j = 0; j < slots; ++j)
            blocks[j] = tape.mode1(hn[st.slot_module(t, j)], zn[t]);
        const NodeId merged = tape.weighted_sum(probs, blocks);
        const NodeId pred = tape.matvec(tape.constant(ts.tasks[t].x_train), merged);
        losses.push_back(tape.mse(pred, tape.constant(ts.tasks[t].y_train)));
    }
    const NodeId total = tape.scale(tape.add_n(losses), 1.0 / double(T));
    tape.backward(total);
    for (const auto& [id, node] : hn) {
        auto it = m.opt_h.find(id);
        if (it == m.opt_h.end())
            it = m.opt_h.emplace(id, AdamState(m.bank.module(id).tensor.shape())).first;
        it->second.step(m.bank.module(id).tensor, tape.grad(node));
    }
    for (std::size_t t = 0; t < T; ++t) m.opt_z[t].step(m.bank.context(t), tape.grad(zn[t]));
    Array s_grad({T, slots});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < slots; ++j) s_grad.at2(t, j) = tape.grad(s_rows[t])[j];
    opt_s.step(st.s, s_grad);
    return tape.value(total)[0];
}

struct Snapshot {
    std::map<int, Hypermodule> modules;
    std::map<int, AdamState> opt_h;
    std::vector<Array> contexts;
    std::vector<AdamState> opt_z;
    std::vector<int> psi;
    double val = 0.0;
    long gen = -1;
};

Snapshot take_snapshot(const JointModel& m, std::size_t locations, double val, long gen) {
    Snapshot s;
    s.modules = m.bank.modules();
    s.opt_h = m.opt_h;
    for (std::size_t t = 0; t < locations; ++t) s.contexts.push_back(m.bank.context(t));
    s.opt_z = m.opt_z;
    s.psi = m.psi;
    s.val = val;
    s.gen = gen;
    return s;
}

void restore_snapshot(JointModel& m, const Snapshot& s) {
    m.bank.modules() = s.modules;
    for (std::size_t t = 0; t < s.contexts.size(); ++t) m.bank.context(t) = s.contexts[t];
    m.opt_h = s.opt_h;
    m.opt_z = s.opt_z;
    m.psi = s.psi;
}

SetupResult finish_result(SetupResult res, const std::vector<double>& per_task_test) {
    res.per_task_test_rmse = per_task_test;
    res.mean_test_rmse = mean(per_task_test);
    res.median_test_rmse = median(per_task_test);
    return res;
}

SetupResult run_search(const SyntheticTaskSet& ts, const MuirConfig& cfg, bool random_commit) {
    cfg.validate();
    const std::size_t T = ts.tasks.size();
    JointModel m = make_pessimistic_model(ts, derive_stream(cfg.seed, 1));
    Rng rng(derive_stream(cfg.seed, 2));
    AlignmentState st = make_alignment_state(m.psi, cfg);
    const std::vector<int> labels = ts.group_labels();
    const int perfect = int(T);

    for (std::size_t i = 0; i < cfg.n_init; ++i) plain_step(m, ts);

    SetupResult res;
    Snapshot best = take_snapshot(m, T, mean(eval_split_rmse(m, ts, false)), -1);
    std::size_t since_best = 0;

    for (std::size_t gen = 0; gen < cfg.n_gen; ++gen) {
        propose_candidates(st, m.bank, cfg, T, rng);
        AdamState opt_s(st.s.shape(), cfg.lr_s);
        for (std::size_t it = 0; it < cfg.n_iter; ++it) merged_step(m, st, ts, opt_s);
        const std::vector<int> deleted =
            random_commit ? commit_random(st, m.bank, rng) : commit_selection(st, m.bank);
        for (int id : deleted) m.opt_h.erase(id);
        m.psi = st.psi0;

        GenerationRecord rec;
        rec.gen = gen;
        rec.per_task_val = eval_split_rmse(m, ts, false);
        rec.val_rmse = mean(rec.per_task_val);
        rec.score = grouping_score(m.psi, labels);
        rec.active_modules = m.bank.active_count();
        rec.params_reparam = m.bank.parameter_counts(m.psi).reparameterized;
        rec.psi = m.psi;
        res.history.push_back(std::move(rec));

        if (res.history.back().val_rmse < best.val) {
            best = take_snapshot(m, T, res.history.back().val_rmse, long(gen));
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) break;
    }

    for (const GenerationRecord& rec : res.history) {
        if (rec.score == perfect && res.first_perfect_gen < 0) res.first_perfect_gen = long(rec.gen);
    }
    if (res.first_perfect_gen >= 0) {
        res.stayed_perfect = true;
        for (const GenerationRecord& rec : res.history)
            if (long(rec.gen) >= res.first_perfect_gen && rec.score != perfect)
                res.stayed_perfect = false;
    }

    restore_snapshot(m, best);
    res.best_gen = best.gen;
    for (std::size_t i = 0; i < cfg.n_final; ++i) plain_step(m, ts);

    res.psi = m.psi;
    res.final_bank = m.bank;
    res.has_final_bank = true;
    return finish_result(std::move(res), eval_split_rmse(m, ts, true));
}

// Plain training with periodic validation and best-parameter restore, shared
// by the Oracle arm and the degenerate-search regression tests.
SetupResult train_plain_es(JointModel& m, const SyntheticTaskSet& ts, const TrainConfig& tc) {
    const std::size_t T = ts.tasks.size();
    Snapshot best = take_snapshot(m, T, mean(eval_split_rmse(m, ts, false)), -1);
    std::size_t bad = 0;
    for (std::size_t step = 1; step <= tc.max_steps; ++step) {
        plain_step(m, ts);
        if (step % tc.eval_every != 0) continue;
        const double val = mean(eval_split_rmse(m, ts, false));
        if (val < best.val) {
            best = take_snapshot(m, T, val, long(step));
            bad = 0;
        } else if (++bad >= tc.patience) {
            break;
        }
    }
    restore_snapshot(m, best);
    SetupResult res;
    res.best_gen = best.gen;
    res.psi = m.psi;
    res.final_bank = m.bank;
    res.has_final_bank = true;
    return finish_result(std::move(res), eval_split_rmse(m, ts, true));
}

}  // namespace

SetupResult run_stl(const SyntheticTaskSet& ts, const TrainConfig& tc) {
    std::vector<double> per_task;
    for (const SyntheticTask& task : ts.tasks) {
        Array w({ts.config.dim});
        AdamState opt(w.shape(), tc.lr);
        Array best_w = w;
        double best_val = predict_rmse(task.x_val, task.y_val, w);
        std::size_t bad = 0;
        for (std::size_t step = 1; step <= tc.max_steps; ++step) {
            Tape tape;
            const NodeId wn = tape.leaf(w);
            const NodeId pred = tape.matvec(tape.constant(task.x_train), wn);
            const NodeId loss = tape.mse(pred, tape.constant(task.y_train));
            tape.backward(loss);
            opt.step(w, tape.grad(wn));
            if (step % tc.eval_every != 0) continue;
            const double val = predict_rmse(task.x_val, task.y_val, w);
            if (val < best_val) {
                best_val = val;
                best_w = w;
                bad = 0;
            } else if (++bad >= tc.patience) {
                break;
            }
        }
        per_task.push_back(predict_rmse(task.x_test, task.y_test, best_w));
    }
    return finish_result(SetupResult{}, per_task);
}

SetupResult run_oracle(const SyntheticTaskSet& ts, const TrainConfig& tc, std::uint64_t seed) {
    JointModel m = make_oracle_model(ts, seed);
    return train_plain_es(m, ts, tc);
}

SetupResult run_muir_synthetic(const SyntheticTaskSet& ts, const MuirConfig& cfg) {
    return run_search(ts, cfg, false);
}

SetupResult run_random_synthetic(const SyntheticTaskSet& ts, const MuirConfig& cfg) {
    return run_search(ts, cfg, true);
}

}  // namespace muir
