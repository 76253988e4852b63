#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "muir/alignment.hpp"
#include "muir/errors.hpp"
#include "muir/rng.hpp"
#include "muir/synthetic.hpp"
#include "muir/tape.hpp"

using namespace muir;

namespace {

SyntheticConfig small_config(std::uint64_t seed) {
    SyntheticConfig c;
    c.seed = seed;
    c.dim = 8;
    c.groups = 2;
    c.tasks_per_group = 2;
    c.n_train = 12;
    c.n_val = 6;
    c.n_test = 20;
    return c;
}

double dot(const Array& a, const Array& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::uint64_t task_set_checksum(const SyntheticTaskSet& ts) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Array& d : ts.directions) h = checksum(d, h);
    for (const SyntheticTask& t : ts.tasks) {
        h = checksum(t.w, h);
        h = checksum(t.x_train, h);
        h = checksum(t.y_train, h);
        h = checksum(t.x_val, h);
        h = checksum(t.y_val, h);
        h = checksum(t.x_test, h);
        h = checksum(t.y_test, h);
    }
    return h;
}

}  // namespace

TEST_CASE("configuration validation rejects degenerate setups") {
    SyntheticConfig c = small_config(0);
    c.dim = 0;
    CHECK_THROWS_AS(c.validate(), config_error);

    c = small_config(0);
    c.groups = c.dim + 1;
    CHECK_THROWS_AS(c.validate(), config_error);

    c = small_config(0);
    c.alpha_min = 3.0;
    c.alpha_max = 1.0;
    CHECK_THROWS_AS(c.validate(), config_error);

    c = small_config(0);
    c.n_val = 0;
    CHECK_THROWS_AS(c.validate(), config_error);

    c = small_config(0);
    c.noise_sigma = -0.1;
    CHECK_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("generated task sets have the documented shapes and labels") {
    const SyntheticConfig cfg = small_config(3);
    const SyntheticTaskSet ts = generate_synthetic(cfg);
    REQUIRE(ts.tasks.size() == 4);
    REQUIRE(ts.directions.size() == 2);
    for (std::size_t t = 0; t < ts.tasks.size(); ++t) {
        const SyntheticTask& task = ts.tasks[t];
        CHECK(task.group == int(t / cfg.tasks_per_group));
        CHECK(task.alpha >= cfg.alpha_min);
        CHECK(task.alpha <= cfg.alpha_max);
        CHECK(task.w.shape() == std::vector<std::size_t>{cfg.dim});
        CHECK(task.x_train.shape() == std::vector<std::size_t>{cfg.n_train, cfg.dim});
        CHECK(task.y_train.shape() == std::vector<std::size_t>{cfg.n_train});
        CHECK(task.x_val.shape() == std::vector<std::size_t>{cfg.n_val, cfg.dim});
        CHECK(task.y_val.shape() == std::vector<std::size_t>{cfg.n_val});
        CHECK(task.x_test.shape() == std::vector<std::size_t>{cfg.n_test, cfg.dim});
        CHECK(task.y_test.shape() == std::vector<std::size_t>{cfg.n_test});
        // True weights are exactly the scaled group direction.
        for (std::size_t d = 0; d < cfg.dim; ++d)
            CHECK(task.w[d] == task.alpha * ts.directions[std::size_t(task.group)][d]);
    }
    CHECK(ts.group_labels() == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("group directions are orthonormal") {
    SyntheticConfig cfg;
    cfg.seed = 17;
    const SyntheticTaskSet ts = generate_synthetic(cfg);
    REQUIRE(ts.directions.size() == 3);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            const double want = a == b ? 1.0 : 0.0;
            CHECK(std::abs(dot(ts.directions[a], ts.directions[b]) - want) <= 1e-12);
        }
}

TEST_CASE("clean targets are exact linear responses") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(5));
    for (const SyntheticTask& task : ts.tasks)
        for (std::size_t i = 0; i < task.y_test.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < ts.config.dim; ++j)
                acc += task.x_test.at2(i, j) * task.w[j];
            CHECK(task.y_test[i] == acc);
        }
}

TEST_CASE("noisy targets deviate by the configured sigma") {
    SyntheticConfig cfg = small_config(21);
    cfg.noisy = true;
    cfg.n_test = 2000;
    const SyntheticTaskSet ts = generate_synthetic(cfg);
    double acc = 0.0;
    std::size_t n = 0;
    for (const SyntheticTask& task : ts.tasks)
        for (std::size_t i = 0; i < task.y_test.size(); ++i) {
            double clean = 0.0;
            for (std::size_t j = 0; j < cfg.dim; ++j)
                clean += task.x_test.at2(i, j) * task.w[j];
            const double r = task.y_test[i] - clean;
            acc += r * r;
            ++n;
        }
    const double sd = std::sqrt(acc / double(n));
    CHECK(sd > 0.9 * cfg.noise_sigma);
    CHECK(sd < 1.1 * cfg.noise_sigma);
}

TEST_CASE("generation is bit-identical per seed and diverges across seeds") {
    const std::uint64_t a = task_set_checksum(generate_synthetic(small_config(9)));
    const std::uint64_t b = task_set_checksum(generate_synthetic(small_config(9)));
    const std::uint64_t c = task_set_checksum(generate_synthetic(small_config(10)));
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("grouping score counts pure and mixed sharing per task") {
    CHECK(grouping_score({0, 1, 2, 3}, {0, 0, 1, 1}) == 0);
    CHECK(grouping_score({7, 7, 7}, {2, 2, 2}) == 3);
    CHECK(grouping_score({7, 7, 7}, {0, 0, 1}) == -3);
    CHECK(grouping_score({5, 5, 6, 7}, {0, 0, 1, 1}) == 2);
    CHECK(grouping_score({5, 5, 5, 7}, {0, 0, 1, 1}) == -3);
    // Top score is one point per task.
    CHECK(grouping_score({4, 4, 9, 9}, {0, 0, 1, 1}) == 4);
    CHECK_THROWS_AS(grouping_score({0, 1}, {0}), contract_error);
}

TEST_CASE("constant-zero baseline is the mean per-task target norm") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(13));
    double acc = 0.0;
    for (const SyntheticTask& task : ts.tasks) {
        double sq = 0.0;
        for (std::size_t i = 0; i < task.y_test.size(); ++i) sq += task.y_test[i] * task.y_test[i];
        acc += std::sqrt(sq / double(task.y_test.size()));
    }
    CHECK(zero_predictor_rmse(ts) == doctest::Approx(acc / double(ts.tasks.size())).epsilon(1e-15));
}

TEST_CASE("pessimistic model starts one private module per task") {
    SyntheticConfig cfg;  // full 30-task layout
    cfg.seed = 2;
    const SyntheticTaskSet ts = generate_synthetic(cfg);
    const JointModel m = make_pessimistic_model(ts, 77);
    REQUIRE(m.bank.active_count() == 30);
    REQUIRE(m.psi.size() == 30);
    CHECK(m.opt_h.size() == 30);
    CHECK(m.opt_z.size() == 30);
    for (std::size_t t = 0; t < 30; ++t) {
        CHECK(m.psi[t] == int(t));
        CHECK(m.bank.module(int(t)).usage == 1);
        // The context constant cancels the module scale exactly, so the
        // generated block is the raw module slice.
        const Array& z = m.bank.context(t);
        REQUIRE(z.size() == 1);
        CHECK(z[0] == 1.0);
        const Array block = m.bank.generate_block(int(t), t);
        const Array& h = m.bank.module(int(t)).tensor;
        REQUIRE(block.shape() == std::vector<std::size_t>{cfg.dim, 1});
        for (std::size_t d = 0; d < cfg.dim; ++d) CHECK(block.at2(d, 0) == h.at3(0, d, 0));
    }
}

TEST_CASE("oracle model shares one module per group") {
    SyntheticConfig cfg;
    cfg.seed = 4;
    const SyntheticTaskSet ts = generate_synthetic(cfg);
    const JointModel m = make_oracle_model(ts, 91);
    REQUIRE(m.bank.active_count() == 3);
    std::map<int, int> module_of_group;
    for (std::size_t t = 0; t < ts.tasks.size(); ++t) {
        const int g = ts.tasks[t].group;
        if (!module_of_group.count(g)) module_of_group[g] = m.psi[t];
        CHECK(m.psi[t] == module_of_group[g]);
    }
    REQUIRE(module_of_group.size() == 3);
    CHECK(module_of_group[0] != module_of_group[1]);
    CHECK(module_of_group[1] != module_of_group[2]);
    for (const auto& [g, id] : module_of_group)
        CHECK(m.bank.module(id).usage == cfg.tasks_per_group);
    CHECK(m.opt_h.size() == 3);
    CHECK(m.opt_z.size() == 30);
}

TEST_CASE("joint full-batch training reduces the loss") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(6));
    JointModel m = make_pessimistic_model(ts, 8);
    std::vector<double> losses;
    for (int i = 0; i < 80; ++i) losses.push_back(plain_step(m, ts));
    CHECK(losses.back() < losses.front());
    for (double v : losses) CHECK(std::isfinite(v));
    for (const auto& [id, mod] : m.bank.modules()) {
        (void)id;
        CHECK(mod.tensor.all_finite());
    }
}

TEST_CASE("merged forward with a single slot matches the plain graph bitwise") {
    Rng rng(31);
    Array h({1, 5, 1}), z({1}), x({6, 5}), y({6});
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = rng.normal();
    z[0] = 0.7;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.normal();

    Tape plain;
    const NodeId ph = plain.leaf(h), pz = plain.leaf(z);
    const NodeId ploss =
        plain.mse(plain.matvec(plain.constant(x), plain.mode1(ph, pz)), plain.constant(y));
    plain.backward(ploss);

    Tape merged;
    const NodeId mh = merged.leaf(h), mz = merged.leaf(z);
    const NodeId probs = merged.softmax(merged.leaf(Array({1}, {0.0})));
    const NodeId block = merged.weighted_sum(probs, {merged.mode1(mh, mz)});
    const NodeId mloss =
        merged.mse(merged.matvec(merged.constant(x), block), merged.constant(y));
    merged.backward(mloss);

    CHECK(merged.value(probs)[0] == 1.0);
    CHECK(merged.value(mloss)[0] == plain.value(ploss)[0]);
    CHECK(checksum(merged.grad(mh)) == checksum(plain.grad(ph)));
    CHECK(checksum(merged.grad(mz)) == checksum(plain.grad(pz)));
}

TEST_CASE("a search with no generations is exactly plain training") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(11));
    MuirConfig cfg;
    cfg.seed = 7;
    cfg.n_init = 0;
    cfg.n_gen = 0;
    cfg.n_final = 30;
    const SetupResult res = run_muir_synthetic(ts, cfg);
    CHECK(res.history.empty());
    CHECK(res.first_perfect_gen == -1);
    CHECK(!res.stayed_perfect);
    CHECK(res.best_gen == -1);
    REQUIRE(res.has_final_bank);

    JointModel m = make_pessimistic_model(ts, derive_stream(cfg.seed, 1));
    for (std::size_t i = 0; i < cfg.n_final; ++i) plain_step(m, ts);
    const std::vector<double> want = eval_split_rmse(m, ts, true);

    REQUIRE(res.per_task_test_rmse.size() == want.size());
    for (std::size_t t = 0; t < want.size(); ++t) CHECK(res.per_task_test_rmse[t] == want[t]);
    REQUIRE(res.psi == m.psi);
    for (const auto& [id, mod] : m.bank.modules())
        CHECK(checksum(res.final_bank.module(id).tensor) == checksum(mod.tensor));
    for (std::size_t t = 0; t < ts.tasks.size(); ++t)
        CHECK(checksum(res.final_bank.context(t)) == checksum(m.bank.context(t)));
}

TEST_CASE("a zero-candidate search never moves the alignment") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(14));
    MuirConfig cfg;
    cfg.seed = 3;
    cfg.lambda = 0;
    cfg.n_iter = 5;
    cfg.n_gen = 3;
    cfg.n_final = 10;
    const SetupResult res = run_muir_synthetic(ts, cfg);
    REQUIRE(res.history.size() == 3);
    const std::vector<int> identity{0, 1, 2, 3};
    CHECK(res.psi == identity);
    for (const GenerationRecord& rec : res.history) {
        CHECK(rec.psi == identity);
        CHECK(rec.active_modules == 4);
    }
}

TEST_CASE("search history rows are internally consistent") {
    const SyntheticTaskSet ts = generate_synthetic(small_config(19));
    const std::size_t T = ts.tasks.size();
    MuirConfig cfg;
    cfg.seed = 23;
    cfg.lambda = 3;
    cfg.n_iter = 6;
    cfg.n_gen = 4;
    cfg.n_final = 20;
    cfg.eps = 0.1;
    const SetupResult res = run_muir_synthetic(ts, cfg);
    const std::vector<int> labels = ts.group_labels();
    REQUIRE(!res.history.empty());
    for (std::size_t i = 0; i < res.history.size(); ++i) {
        const GenerationRecord& rec = res.history[i];
        CHECK(rec.gen == i);
        REQUIRE(rec.psi.size() == T);
        REQUIRE(rec.per_task_val.size() == T);
        CHECK(rec.score == grouping_score(rec.psi, labels));
        CHECK(rec.active_modules >= 1);
        CHECK(rec.active_modules <= T);
        // c = 1, m = dim, n = 1 reparameterization.
        CHECK(rec.params_reparam == T + rec.active_modules * ts.config.dim);
        for (double v : rec.per_task_val) CHECK(v >= 0.0);
    }
    if (res.first_perfect_gen >= 0)
        CHECK(res.history[std::size_t(res.first_perfect_gen)].score == int(T));
    REQUIRE(res.has_final_bank);
    std::size_t usage = 0;
    for (const auto& [id, mod] : res.final_bank.modules()) {
        (void)id;
        usage += mod.usage;
    }
    CHECK(usage == T);
}

TEST_CASE("independent per-task training beats the zero baseline on clean data") {
    SyntheticConfig scfg = small_config(25);
    scfg.n_train = 30;
    const SyntheticTaskSet ts = generate_synthetic(scfg);
    TrainConfig tc;
    tc.max_steps = 2000;
    tc.eval_every = 50;
    tc.patience = 6;
    const SetupResult res = run_stl(ts, tc);
    CHECK(res.psi.empty());
    CHECK(!res.has_final_bank);
    CHECK(res.mean_test_rmse < 0.3 * zero_predictor_rmse(ts));
    CHECK(res.per_task_test_rmse.size() == ts.tasks.size());
}
