#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <vector>

#include "muir/decompose.hpp"
#include "muir/errors.hpp"
#include "muir/rng.hpp"

using namespace muir;

namespace {

LayerSpec conv2d(const std::string& name, std::size_t in, std::size_t out, bool adapter = false) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Conv2d;
    l.in = in;
    l.out = out;
    l.kernel_h = 3;
    l.kernel_w = 3;
    l.adapter = adapter;
    return l;
}

LayerSpec dense(const std::string& name, std::size_t in, std::size_t out, bool adapter = false) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Dense;
    l.in = in;
    l.out = out;
    l.adapter = adapter;
    return l;
}

LayerSpec conv1d(const std::string& name, std::size_t in, std::size_t out, std::size_t k,
                 bool adapter = false) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Conv1d;
    l.in = in;
    l.out = out;
    l.kernel_w = k;
    l.adapter = adapter;
    return l;
}

LayerSpec lstm(const std::string& name, std::size_t in, std::size_t hidden) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Lstm;
    l.in = in;
    l.out = hidden;
    return l;
}

std::vector<LayerSpec> residual_cifar_net() {
    std::vector<LayerSpec> layers;
    layers.push_back(conv2d("conv0", 3, 16, true));
    for (int i = 0; i < 12; ++i) layers.push_back(conv2d("g1", 16, 16));
    layers.push_back(conv2d("g2a", 16, 32));
    for (int i = 0; i < 11; ++i) layers.push_back(conv2d("g2", 32, 32));
    layers.push_back(conv2d("g2proj", 16, 32));
    layers.push_back(conv2d("g3a", 32, 64));
    for (int i = 0; i < 11; ++i) layers.push_back(conv2d("g3", 64, 64));
    layers.push_back(conv2d("g3proj", 32, 64));
    layers.push_back(dense("fc", 64, 10, true));
    return layers;
}

}  // namespace

TEST_CASE("slot counts per layer kind") {
    CHECK(slot_count(dense("d", 8, 8)) == 1);
    CHECK(slot_count(conv1d("c", 8, 8, 24)) == 24);
    CHECK(slot_count(conv2d("c", 8, 8)) == 9);
    CHECK(slot_count(lstm("l", 8, 8)) == 8);
}

TEST_CASE("slot shapes and fan-in follow the layer geometry") {
    const LayerSpec d = dense("d", 20, 30);
    CHECK(slot_shape(d, 0) == std::pair<std::size_t, std::size_t>{20, 30});
    CHECK(layer_fan_in(d, 0) == 20);

    const LayerSpec c = conv2d("c", 16, 32);
    for (std::size_t s = 0; s < 9; ++s) {
        CHECK(slot_shape(c, s) == std::pair<std::size_t, std::size_t>{16, 32});
        CHECK(layer_fan_in(c, s) == 16 * 9);
    }

    const LayerSpec r = lstm("l", 128, 256);
    CHECK(slot_shape(r, 0) == std::pair<std::size_t, std::size_t>{128, 256});
    CHECK(slot_shape(r, 4) == std::pair<std::size_t, std::size_t>{256, 256});
    CHECK(layer_fan_in(r, 3) == 128);
    CHECK(layer_fan_in(r, 7) == 256);

    CHECK_THROWS_AS(slot_shape(d, 1), contract_error);
}

TEST_CASE("residual cifar architecture tiles into 2268 blocks at 16x16") {
    const auto locs = decompose_architecture(residual_cifar_net(), 16, 16);
    // group1: 12 convs of 16->16, one tile per slot; group2: widths 16->32
    // and 32->32 plus the projection; group3: doubled again.
    const std::size_t group1 = 12 * 9 * 1 * 1;
    const std::size_t group2 = 9 * 1 * 2 + 11 * 9 * 2 * 2 + 9 * 1 * 2;
    const std::size_t group3 = 9 * 2 * 4 + 11 * 9 * 4 * 4 + 9 * 2 * 4;
    CHECK(group1 + group2 + group3 == 2268);
    CHECK(locs.size() == 2268);

    for (std::size_t i = 0; i < locs.size(); ++i) CHECK(locs[i].ell == i);

    const DecomposeReport rep = decompose_report(residual_cifar_net(), 16, 16);
    CHECK(rep.total_blocks == 2268);
    CHECK(rep.total_params_decomposed == 2268 * 16 * 16);
    CHECK(rep.layers.front().adapter);
    CHECK(rep.layers.front().block_count == 0);
    CHECK(rep.layers.back().adapter);
}

TEST_CASE("two stacked recurrent layers tile into 4096 blocks at 16x16") {
    std::vector<LayerSpec> layers;
    layers.push_back(dense("embed", 10000, 256, true));
    layers.push_back(lstm("lstm1", 256, 256));
    layers.push_back(lstm("lstm2", 256, 256));
    layers.push_back(dense("logits", 256, 10000, true));
    const auto locs = decompose_architecture(layers, 16, 16);
    CHECK(2 * 8 * (256 / 16) * (256 / 16) == 4096);
    CHECK(locs.size() == 4096);
}

TEST_CASE("motif scanning architecture tiles into 6400 blocks at 16x16") {
    std::vector<LayerSpec> layers;
    layers.push_back(conv1d("motif", 4, 256, 24, true));
    layers.push_back(conv1d("conv1", 256, 256, 24));
    layers.push_back(dense("dense", 256, 256));
    layers.push_back(dense("output", 256, 1, true));
    const auto locs = decompose_architecture(layers, 16, 16);
    CHECK(24 * 16 * 16 + 16 * 16 == 6400);
    CHECK(locs.size() == 6400);
}

TEST_CASE("first and last layers are reserved even without the adapter flag") {
    std::vector<LayerSpec> layers;
    layers.push_back(dense("in", 32, 32));
    layers.push_back(dense("mid", 32, 32));
    layers.push_back(dense("out", 32, 32));
    const auto locs = decompose_architecture(layers, 16, 16);
    CHECK(locs.size() == 4);
    for (const PseudoTaskLocation& loc : locs) CHECK(loc.layer_id == 1);

    layers[1].adapter = true;
    CHECK(decompose_architecture(layers, 16, 16).empty());
}

TEST_CASE("strict policy rejects non-divisible layers, truncate floors them") {
    std::vector<LayerSpec> layers;
    layers.push_back(dense("in", 16, 16, true));
    layers.push_back(dense("mid", 20, 35));
    layers.push_back(dense("out", 16, 16, true));
    CHECK_THROWS_AS(decompose_architecture(layers, 16, 16), config_error);

    const auto locs = decompose_architecture(layers, 16, 16, OverflowPolicy::Truncate);
    CHECK(locs.size() == (20 / 16) * (35 / 16));
}

TEST_CASE("extract and assemble round-trip every slot of a layer") {
    Rng rng(2024);
    const std::size_t m = 4, n = 4;

    for (const LayerSpec& spec : {conv2d("c", 8, 12), lstm("l", 8, 12)}) {
        const auto locs = decompose_architecture({dense("in", 4, 4, true), spec,
                                                  dense("out", 4, 4, true)},
                                                 m, n);
        const std::size_t slots = slot_count(spec);

        std::vector<Array> matrices;
        for (std::size_t s = 0; s < slots; ++s) {
            const auto [rows, cols] = slot_shape(spec, s);
            Array mat({rows, cols});
            for (std::size_t i = 0; i < mat.size(); ++i) mat[i] = rng.normal();
            matrices.push_back(mat);
        }

        std::map<std::size_t, Array> blocks;
        for (const PseudoTaskLocation& loc : locs)
            blocks.emplace(loc.ell, extract_block(matrices[loc.slot], loc, m, n));

        const std::vector<Array> rebuilt = assemble_layer(spec, 1, m, n, locs, blocks);
        REQUIRE(rebuilt.size() == slots);
        for (std::size_t s = 0; s < slots; ++s) {
            REQUIRE(rebuilt[s].same_shape(matrices[s]));
            for (std::size_t i = 0; i < matrices[s].size(); ++i)
                CHECK(rebuilt[s][i] == matrices[s][i]);
        }
    }
}

TEST_CASE("assemble rejects missing blocks") {
    const LayerSpec spec = dense("mid", 8, 8);
    const auto locs = decompose_architecture({dense("in", 4, 4, true), spec,
                                              dense("out", 4, 4, true)},
                                             4, 4);
    std::map<std::size_t, Array> blocks;
    for (std::size_t i = 1; i < locs.size(); ++i)
        blocks.emplace(locs[i].ell, Array({4, 4}));
    CHECK_THROWS_AS(assemble_layer(spec, 1, 4, 4, locs, blocks), integrity_error);
}

TEST_CASE("extract_block rejects out-of-range tiles") {
    Array mat({8, 8});
    PseudoTaskLocation loc;
    loc.bi = 2;
    loc.bj = 0;
    CHECK_THROWS_AS(extract_block(mat, loc, 4, 4), integrity_error);
}
