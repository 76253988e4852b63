// Command-line entry point. Four subcommands:
//   synthetic  - grouped-regression benchmark, setups x seeds, artifact dir
//   theory     - search-cost sweeps over the reduced alignment chain
//   decompose  - architecture file -> block/parameter report
//   analyze    - checkpoint directory -> modularity/generality report
// Every run directory gets a manifest with per-file checksums. MUIR_THREADS
// controls the trial-level parallelism of `theory`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "muir/decompose.hpp"
#include "muir/errors.hpp"
#include "muir/io.hpp"
#include "muir/rng.hpp"
#include "muir/stats.hpp"
#include "muir/synthetic.hpp"
#include "muir/theory.hpp"

namespace fs = std::filesystem;
using muir::io::json;

namespace {

int env_threads() {
    const char* v = std::getenv("MUIR_THREADS");
    if (v == nullptr) return 1;
    const int n = std::atoi(v);
    if (n < 1) return 1;
    return n > 64 ? 64 : n;
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

muir::SyntheticConfig parse_data(const json& obj) {
    muir::io::require_known_keys(obj,
                                 {"dim", "groups", "tasks_per_group", "n_train", "n_val",
                                  "n_test", "alpha_min", "alpha_max", "noisy", "noise_sigma"},
                                 "data");
    muir::SyntheticConfig d;
    d.dim = get_or<std::size_t>(obj, "dim", d.dim);
    d.groups = get_or<std::size_t>(obj, "groups", d.groups);
    d.tasks_per_group = get_or<std::size_t>(obj, "tasks_per_group", d.tasks_per_group);
    d.n_train = get_or<std::size_t>(obj, "n_train", d.n_train);
    d.n_val = get_or<std::size_t>(obj, "n_val", d.n_val);
    d.n_test = get_or<std::size_t>(obj, "n_test", d.n_test);
    d.alpha_min = get_or<double>(obj, "alpha_min", d.alpha_min);
    d.alpha_max = get_or<double>(obj, "alpha_max", d.alpha_max);
    d.noisy = get_or<bool>(obj, "noisy", d.noisy);
    d.noise_sigma = get_or<double>(obj, "noise_sigma", d.noise_sigma);
    return d;
}

muir::MuirConfig parse_search(const json& obj) {
    muir::io::require_known_keys(obj,
                                 {"lambda", "p", "lr_s", "n_init", "n_iter", "n_gen", "n_final",
                                  "alpha", "eps", "patience"},
                                 "search");
    muir::MuirConfig c;
    c.lambda = get_or<std::size_t>(obj, "lambda", c.lambda);
    c.p = get_or<double>(obj, "p", c.p);
    c.lr_s = get_or<double>(obj, "lr_s", c.lr_s);
    c.n_init = get_or<std::size_t>(obj, "n_init", c.n_init);
    c.n_iter = get_or<std::size_t>(obj, "n_iter", c.n_iter);
    c.n_gen = get_or<std::size_t>(obj, "n_gen", c.n_gen);
    c.n_final = get_or<std::size_t>(obj, "n_final", c.n_final);
    c.alpha = get_or<double>(obj, "alpha", c.alpha);
    c.eps = get_or<double>(obj, "eps", c.eps);
    c.patience = get_or<std::size_t>(obj, "patience", c.patience);
    return c;
}

muir::TrainConfig parse_train(const json& obj) {
    muir::io::require_known_keys(obj, {"max_steps", "eval_every", "patience", "lr"}, "train");
    muir::TrainConfig t;
    t.max_steps = get_or<std::size_t>(obj, "max_steps", t.max_steps);
    t.eval_every = get_or<std::size_t>(obj, "eval_every", t.eval_every);
    t.patience = get_or<std::size_t>(obj, "patience", t.patience);
    t.lr = get_or<double>(obj, "lr", t.lr);
    return t;
}

json seed_summary(const muir::SetupResult& r, std::uint64_t seed, int score, bool searched) {
    json j;
    j["seed"] = seed;
    j["mean_test_rmse"] = r.mean_test_rmse;
    j["median_test_rmse"] = r.median_test_rmse;
    if (!r.psi.empty()) j["grouping_score"] = score;
    if (searched) {
        j["generations_run"] = r.history.size();
        j["first_perfect_gen"] = r.first_perfect_gen;
        j["stayed_perfect"] = r.stayed_perfect;
        j["best_gen"] = r.best_gen;
        j["active_modules"] = r.history.empty() ? 0 : r.history.back().active_modules;
    }
    return j;
}

int cmd_synthetic(const fs::path& config_path, fs::path out,
                  std::vector<std::uint64_t> seed_override) {
    const json cfg = muir::io::load_json(config_path);
    muir::io::require_known_keys(cfg, {"setups", "seeds", "data", "search", "train"},
                                 "synthetic config");

    std::vector<std::string> setups =
        get_or<std::vector<std::string>>(cfg, "setups", {"stl", "random", "oracle", "muir"});
    const std::set<std::string> known{"stl", "random", "oracle", "muir"};
    for (const std::string& s : setups)
        if (known.count(s) == 0) throw muir::config_error("unknown setup '" + s + "'");

    std::vector<std::uint64_t> seeds = seed_override.empty()
                                           ? get_or<std::vector<std::uint64_t>>(cfg, "seeds", {})
                                           : std::move(seed_override);
    if (seeds.empty()) throw muir::config_error("seed list is empty");

    const muir::SyntheticConfig data_base = parse_data(get_or<json>(cfg, "data", json::object()));
    const muir::MuirConfig search_base = parse_search(get_or<json>(cfg, "search", json::object()));
    const muir::TrainConfig train_cfg = parse_train(get_or<json>(cfg, "train", json::object()));
    search_base.validate();
    if (train_cfg.lr <= 0.0) throw muir::config_error("train.lr must be positive");

    if (out.empty()) out = "runs/synthetic";
    muir::io::RunDir rd(out);
    rd.set_config_hash(muir::io::checksum_file(config_path));
    rd.set_seeds(seeds);
    rd.write_artifact("config.json", cfg);

    std::map<std::string, std::vector<json>> per_seed;
    std::map<std::string, std::vector<double>> means;
    std::vector<double> zero_rmse;

    for (std::uint64_t seed : seeds) {
        muir::SyntheticConfig data = data_base;
        data.seed = seed;
        const muir::SyntheticTaskSet ts = muir::generate_synthetic(data);
        const std::vector<int> labels = ts.group_labels();
        zero_rmse.push_back(muir::zero_predictor_rmse(ts));

        for (const std::string& setup : setups) {
            try {
                muir::SetupResult res;
                bool searched = false;
                if (setup == "stl") {
                    res = muir::run_stl(ts, train_cfg);
                } else if (setup == "oracle") {
                    res = muir::run_oracle(ts, train_cfg, muir::derive_stream(seed, 101));
                } else {
                    muir::MuirConfig mc = search_base;
                    mc.seed = muir::derive_stream(seed, setup == "muir" ? 102 : 103);
                    res = setup == "muir" ? muir::run_muir_synthetic(ts, mc)
                                          : muir::run_random_synthetic(ts, mc);
                    searched = true;
                }
                const int score =
                    res.psi.empty() ? 0 : muir::grouping_score(res.psi, labels);
                per_seed[setup].push_back(seed_summary(res, seed, score, searched));
                means[setup].push_back(res.mean_test_rmse);

                const std::string prefix = setup + "_seed" + std::to_string(seed);
                if (searched) {
                    rd.write_artifact(prefix + "_history.csv", muir::io::history_csv(res.history));
                    rd.write_artifact(prefix + "_alignment.json",
                                      muir::io::alignment_json(res.history));
                }
                if (res.has_final_bank)
                    rd.write_artifact(prefix + "_checkpoint.json",
                                      muir::io::checkpoint_to_json(res.final_bank, res.psi));

                if (searched)
                    std::printf("[synthetic] %-6s seed %llu: test rmse %.4f score %d "
                                "first-perfect %ld gens %zu\n",
                                setup.c_str(), (unsigned long long)seed, res.mean_test_rmse,
                                score, res.first_perfect_gen, res.history.size());
                else
                    std::printf("[synthetic] %-6s seed %llu: test rmse %.4f\n", setup.c_str(),
                                (unsigned long long)seed, res.mean_test_rmse);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "[synthetic] %s seed %llu failed: %s\n", setup.c_str(),
                             (unsigned long long)seed, e.what());
                rd.mark_failed(seed);
            }
        }
    }

    json results;
    results["task_count"] = data_base.task_count();
    results["noisy"] = data_base.noisy;
    results["seeds"] = seeds;
    results["zero_predictor_rmse_mean"] = muir::mean(zero_rmse);
    for (const std::string& setup : setups) {
        json block;
        block["per_seed"] = per_seed[setup];
        const std::vector<double>& m = means[setup];
        if (!m.empty()) {
            block["mean_rmse"] = muir::mean(m);
            block["stderr_rmse"] = muir::stderr_mean(m);
            block["median_rmse"] = muir::median(m);
        }
        results["setups"][setup] = block;
    }
    rd.write_artifact("results.json", results);
    rd.finish();

    for (const std::string& setup : setups)
        if (!means[setup].empty())
            std::printf("[synthetic] %-6s mean %.4f +/- %.4f over %zu seeds\n", setup.c_str(),
                        muir::mean(means[setup]), muir::stderr_mean(means[setup]),
                        means[setup].size());
    std::printf("[synthetic] artifacts in %s\n", out.string().c_str());
    return rd.all_succeeded() ? 0 : 1;
}

std::vector<std::size_t> size_list(const json& v, const std::string& where) {
    std::vector<std::size_t> out;
    if (v.is_number_unsigned() || v.is_number_integer()) {
        out.push_back(v.get<std::size_t>());
    } else if (v.is_array()) {
        for (const json& e : v) out.push_back(e.get<std::size_t>());
    } else {
        throw muir::config_error(where + " must be an integer or integer list");
    }
    if (out.empty()) throw muir::config_error(where + " is empty");
    return out;
}

int cmd_theory(const fs::path& config_path, fs::path out) {
    const json cfg = muir::io::load_json(config_path);
    muir::io::require_known_keys(cfg, {"trials", "base_seed", "max_iters", "sweeps"},
                                 "theory config");
    const std::size_t trials = get_or<std::size_t>(cfg, "trials", 200);
    const std::uint64_t base_seed = get_or<std::uint64_t>(cfg, "base_seed", 0);
    const std::size_t max_iters = get_or<std::size_t>(cfg, "max_iters", 10000000);
    if (!cfg.contains("sweeps") || !cfg.at("sweeps").is_array() || cfg.at("sweeps").empty())
        throw muir::config_error("theory config needs a non-empty 'sweeps' array");

    if (out.empty()) out = "runs/theory";
    muir::io::RunDir rd(out);
    rd.set_config_hash(muir::io::checksum_file(config_path));
    rd.write_artifact("config.json", cfg);

    const int threads = env_threads();
    json report;
    report["trials"] = trials;
    std::uint64_t point_counter = 0;

    for (const json& sw : cfg.at("sweeps")) {
        muir::io::require_known_keys(
            sw, {"name", "L", "K", "D", "lambda", "sampling", "init", "fit_log_l", "r2_min"},
            "sweep");
        const std::string name = sw.at("name").get<std::string>();
        const std::vector<std::size_t> Ls = size_list(sw.at("L"), name + ".L");
        const bool tie_k = sw.contains("K") && sw.at("K").is_string();
        const bool tie_d = sw.contains("D") && sw.at("D").is_string();
        if (tie_k && sw.at("K").get<std::string>() != "L")
            throw muir::config_error(name + ".K string value must be \"L\"");
        if (tie_d && sw.at("D").get<std::string>() != "L")
            throw muir::config_error(name + ".D string value must be \"L\"");
        const std::vector<std::size_t> Ks =
            tie_k ? std::vector<std::size_t>{0} : size_list(get_or<json>(sw, "K", json(2)), name + ".K");
        const std::vector<std::size_t> Ds =
            tie_d ? std::vector<std::size_t>{0} : size_list(get_or<json>(sw, "D", json(1)), name + ".D");

        const std::string sampling = get_or<std::string>(sw, "sampling", "uniform");
        const std::string init = get_or<std::string>(sw, "init", "uniform");
        if (sampling != "uniform" && sampling != "proportional")
            throw muir::config_error(name + ".sampling must be uniform|proportional");
        if (init != "uniform" && init != "pessimistic")
            throw muir::config_error(name + ".init must be uniform|pessimistic");

        json points = json::array();
        std::vector<double> xs, ys;
        bool any_timeout = false;
        for (std::size_t L : Ls) {
            for (std::size_t K0 : Ks) {
                for (std::size_t D0 : Ds) {
                    muir::EAParams p;
                    p.L = L;
                    p.K = tie_k ? L : K0;
                    p.D = tie_d ? L : D0;
                    p.lambda = get_or<std::size_t>(sw, "lambda", 1);
                    p.sampling = sampling == "proportional" ? muir::SamplingMode::Proportional
                                                            : muir::SamplingMode::Uniform;
                    p.init = init == "pessimistic" ? muir::InitMode::Pessimistic
                                                   : muir::InitMode::UniformRandom;
                    p.max_iters = max_iters;
                    const muir::TrialBatch b = muir::run_trials(
                        p, trials, muir::derive_stream(base_seed, point_counter++), threads);
                    any_timeout |= b.timeouts > 0;
                    json pt;
                    pt["L"] = p.L;
                    pt["K"] = p.K;
                    pt["D"] = p.D;
                    pt["mean_iters"] = b.mean_iters;
                    pt["median_iters"] = b.median_iters;
                    pt["std_iters"] = b.std_iters;
                    pt["timeouts"] = b.timeouts;
                    points.push_back(pt);
                    xs.push_back(std::log(double(p.L)));
                    ys.push_back(b.mean_iters);
                    std::printf("[theory] %s L=%zu K=%zu D=%zu: mean %.2f median %.1f "
                                "std %.2f timeouts %zu\n",
                                name.c_str(), p.L, p.K, p.D, b.mean_iters, b.median_iters,
                                b.std_iters, b.timeouts);
                }
            }
        }

        json sweep_out;
        sweep_out["name"] = name;
        sweep_out["points"] = points;
        if (get_or<bool>(sw, "fit_log_l", false)) {
            const double r2_min = get_or<double>(sw, "r2_min", 0.9);
            const muir::LinearFit fit = muir::fit_scaling(xs, ys);
            json f;
            f["intercept"] = fit.intercept;
            f["slope"] = fit.slope;
            f["r2"] = fit.r2;
            f["r2_min"] = r2_min;
            const bool log_like = fit.r2 >= r2_min && !any_timeout;
            f["verdict"] = log_like ? "consistent-with-log-scaling" : "not-log-scaling";
            if (ys.size() >= 2 && ys[ys.size() - 2] > 0.0)
                f["last_pair_ratio"] = ys.back() / ys[ys.size() - 2];
            sweep_out["fit"] = f;
            std::printf("[theory] %s fit: %.3f + %.3f*ln L, r2 %.4f -> %s\n", name.c_str(),
                        fit.intercept, fit.slope, fit.r2, log_like ? "log-scaling" : "no");
        }
        report["sweeps"].push_back(sweep_out);
    }

    rd.write_artifact("scaling_report.json", report);
    rd.finish();
    std::printf("[theory] artifacts in %s\n", out.string().c_str());
    return 0;
}

muir::LayerSpec parse_layer(const json& obj) {
    muir::io::require_known_keys(obj, {"name", "kind", "in", "out", "kernel", "adapter"},
                                 "layer");
    muir::LayerSpec l;
    l.name = obj.at("name").get<std::string>();
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "dense")
        l.kind = muir::LayerKind::Dense;
    else if (kind == "conv1d")
        l.kind = muir::LayerKind::Conv1d;
    else if (kind == "conv2d")
        l.kind = muir::LayerKind::Conv2d;
    else if (kind == "lstm")
        l.kind = muir::LayerKind::Lstm;
    else
        throw muir::config_error("layer '" + l.name + "': unknown kind '" + kind + "'");
    l.in = obj.at("in").get<std::size_t>();
    l.out = obj.at("out").get<std::size_t>();
    l.adapter = get_or<bool>(obj, "adapter", false);
    if (obj.contains("kernel")) {
        const json& k = obj.at("kernel");
        if (k.is_array()) {
            if (k.size() != 2)
                throw muir::config_error("layer '" + l.name + "': kernel list must be [h, w]");
            l.kernel_h = k.at(0).get<std::size_t>();
            l.kernel_w = k.at(1).get<std::size_t>();
        } else {
            l.kernel_w = k.get<std::size_t>();
            if (l.kind == muir::LayerKind::Conv2d) l.kernel_h = l.kernel_w;
        }
    }
    return l;
}

int cmd_decompose(const fs::path& config_path, fs::path out) {
    const json cfg = muir::io::load_json(config_path);
    muir::io::require_known_keys(cfg, {"name", "m", "n", "c", "policy", "layers"},
                                 "architecture");
    const std::size_t m = get_or<std::size_t>(cfg, "m", 16);
    const std::size_t n = get_or<std::size_t>(cfg, "n", 16);
    const std::size_t c = get_or<std::size_t>(cfg, "c", 4);
    const std::string policy_name = get_or<std::string>(cfg, "policy", "strict");
    if (policy_name != "strict" && policy_name != "truncate")
        throw muir::config_error("policy must be strict|truncate");
    const muir::OverflowPolicy policy = policy_name == "strict" ? muir::OverflowPolicy::Strict
                                                                : muir::OverflowPolicy::Truncate;
    if (!cfg.contains("layers") || !cfg.at("layers").is_array() || cfg.at("layers").empty())
        throw muir::config_error("architecture needs a non-empty 'layers' array");

    std::vector<muir::LayerSpec> layers;
    for (const json& lj : cfg.at("layers")) layers.push_back(parse_layer(lj));

    const muir::DecomposeReport rep = muir::decompose_report(layers, m, n, policy);
    const std::size_t L = rep.total_blocks;

    json out_json;
    out_json["name"] = get_or<std::string>(cfg, "name", config_path.stem().string());
    out_json["m"] = m;
    out_json["n"] = n;
    out_json["c"] = c;
    out_json["policy"] = policy_name;
    for (const muir::LayerReport& lr : rep.layers) {
        json l;
        l["name"] = lr.name;
        l["blocks"] = lr.block_count;
        l["params"] = lr.param_count;
        l["adapter"] = lr.adapter;
        out_json["layers"].push_back(l);
    }
    out_json["total_blocks"] = L;
    out_json["decomposed_params"] = rep.total_params_decomposed;
    // Reparameterized count at the pessimistic start (one module per block):
    // L contexts of length c plus L tensors of c*m*n entries. Parity is the
    // largest module count whose reparameterized total stays at or below the
    // raw count.
    out_json["params_original"] = L * m * n;
    out_json["params_reparameterized_start"] = L * c + L * c * m * n;
    out_json["module_count_at_parity"] =
        m * n > c ? (L * (m * n - c)) / (c * m * n) : 0;

    if (out.empty()) out = "runs/decompose";
    muir::io::RunDir rd(out);
    rd.set_config_hash(muir::io::checksum_file(config_path));
    rd.write_artifact("report.json", out_json);
    rd.finish();

    std::printf("[decompose] %s: %zu blocks (%zu decomposed params) at %zux%zu\n",
                out_json["name"].get<std::string>().c_str(), L, rep.total_params_decomposed, m,
                n);
    for (const muir::LayerReport& lr : rep.layers)
        std::printf("[decompose]   %-12s %s blocks %zu params %zu\n", lr.name.c_str(),
                    lr.adapter ? "adapter" : "       ", lr.block_count, lr.param_count);
    std::printf("[decompose] report in %s\n", out.string().c_str());
    return 0;
}

// Minimal CSV reader for the history artifact: returns column `col` indexed
// by the header row.
std::vector<double> csv_column(const std::string& text, const std::string& col) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.empty()) return {};

    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string f;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(f);
                f.clear();
            } else {
                f.push_back(ch);
            }
        }
        fields.push_back(f);
        return fields;
    };

    const std::vector<std::string> header = split(lines[0]);
    std::size_t idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == col) idx = i;
    if (idx == header.size()) return {};

    std::vector<double> values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> fields = split(lines[i]);
        if (idx < fields.size()) values.push_back(std::atof(fields[idx].c_str()));
    }
    return values;
}

int cmd_analyze(const fs::path& run_dir, fs::path out) {
    std::vector<fs::path> checkpoints;
    for (const fs::directory_entry& e : fs::directory_iterator(run_dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() > 16 && name.substr(name.size() - 16) == "_checkpoint.json")
            checkpoints.push_back(e.path());
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    if (checkpoints.empty())
        throw muir::config_error("no *_checkpoint.json found in " + run_dir.string());

    json report;
    for (const fs::path& cp : checkpoints) {
        const muir::io::Checkpoint ck = muir::io::checkpoint_from_json(muir::io::load_json(cp));
        const muir::GeneralityReport gr = muir::generality_stats(ck.bank, ck.psi);
        const muir::Bank::ParameterCounts pc = ck.bank.parameter_counts(ck.psi);

        json entry;
        entry["file"] = cp.filename().string();
        entry["locations"] = ck.psi.size();
        entry["active_modules"] = ck.bank.active_count();
        entry["generic_modules"] = gr.generic_modules;
        entry["specific_modules"] = gr.specific_modules;
        json usage;
        for (const auto& [id, mod] : ck.bank.modules())
            usage[std::to_string(id)] = mod.usage;
        entry["usage"] = usage;
        entry["params"] = {{"original", pc.original},
                           {"reparameterized", pc.reparameterized},
                           {"inference", pc.inference},
                           {"collapsed_locations", pc.collapsed_locations}};
        entry["pvalues"] = {{"modules",
                             {{"stdev", gr.modules.p_stdev},
                              {"mean", gr.modules.p_mean},
                              {"l2", gr.modules.p_l2},
                              {"max", gr.modules.p_max}}},
                            {"contexts",
                             {{"stdev", gr.contexts.p_stdev},
                              {"mean", gr.contexts.p_mean},
                              {"l2", gr.contexts.p_l2},
                              {"max", gr.contexts.p_max}}},
                            {"generated",
                             {{"stdev", gr.generated.p_stdev},
                              {"mean", gr.generated.p_mean},
                              {"l2", gr.generated.p_l2},
                              {"max", gr.generated.p_max}}}};

        const std::string base = cp.filename().string();
        const fs::path hist =
            run_dir / (base.substr(0, base.size() - 16) + "_history.csv");
        if (fs::exists(hist)) {
            const std::vector<double> params =
                csv_column(muir::io::read_text(hist), "params_reparameterized");
            const std::vector<double> scores =
                csv_column(muir::io::read_text(hist), "grouping_score");
            json h;
            h["generations"] = params.size();
            h["params_trajectory"] = params;
            if (!scores.empty()) h["final_score"] = scores.back();
            if (!params.empty()) {
                h["params_first"] = params.front();
                h["params_final"] = params.back();
            }
            entry["history"] = h;
        }

        report["checkpoints"].push_back(entry);
        std::printf("[analyze] %s: %zu modules (%zu generic, %zu specific), inference params "
                    "%zu / %zu\n",
                    cp.filename().string().c_str(), ck.bank.active_count(), gr.generic_modules,
                    gr.specific_modules, pc.inference, pc.original);
    }

    if (out.empty()) out = run_dir / "analysis.json";
    muir::io::write_text(out, report.dump(2) + "\n");
    std::printf("[analyze] report in %s\n", out.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modular block-reparameterization workbench"};
    app.require_subcommand(1);

    std::string config, out, run_dir;
    std::vector<std::uint64_t> seeds;

    CLI::App* syn = app.add_subcommand("synthetic", "Grouped-regression benchmark setups");
    syn->add_option("--config", config, "JSON config with data/search/train sections")
        ->required()
        ->check(CLI::ExistingFile);
    syn->add_option("--out", out, "Artifact directory (default runs/synthetic)");
    syn->add_option("--seeds", seeds, "Comma-separated seed list overriding the config")
        ->delimiter(',');

    CLI::App* theory = app.add_subcommand("theory", "Search-cost sweeps on the reduced chain");
    theory->add_option("--config", config, "JSON config with a sweeps array")
        ->required()
        ->check(CLI::ExistingFile);
    theory->add_option("--out", out, "Artifact directory (default runs/theory)");

    CLI::App* decomp = app.add_subcommand("decompose", "Architecture to block report");
    decomp->add_option("--config", config, "Architecture JSON")
        ->required()
        ->check(CLI::ExistingFile);
    decomp->add_option("--out", out, "Artifact directory (default runs/decompose)");

    CLI::App* analyze = app.add_subcommand("analyze", "Checkpoint directory to modularity report");
    analyze->add_option("--run", run_dir, "Run directory holding *_checkpoint.json")
        ->required()
        ->check(CLI::ExistingDirectory);
    analyze->add_option("--out", out, "Report path (default <run>/analysis.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (syn->parsed()) return cmd_synthetic(config, out, seeds);
        if (theory->parsed()) return cmd_theory(config, out);
        if (decomp->parsed()) return cmd_decompose(config, out);
        if (analyze->parsed()) return cmd_analyze(run_dir, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
