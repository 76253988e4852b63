#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "muir/array.hpp"

namespace muir {

enum class LayerKind { Dense, Conv1d, Conv2d, Lstm };

enum class OverflowPolicy { Strict, Truncate };

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Dense;
    std::size_t in = 0;        // input units / channels
    std::size_t out = 0;       // output units / channels; for lstm, hidden size
    std::size_t kernel_h = 1;  // conv2d
    std::size_t kernel_w = 1;  // conv1d / conv2d
    bool adapter = false;      // adapter layers are never decomposed

    std::size_t receptive_field() const { return kernel_h * kernel_w; }
};

// One m x n block slot inside a host layer. slot is the receptive-field
// position for conv layers, the gate-matrix index for lstm (0-3 input-to-
// hidden, 4-7 hidden-to-hidden), 0 for dense.
struct PseudoTaskLocation {
    std::size_t ell = 0;
    std::size_t layer_id = 0;
    std::size_t slot = 0;
    std::size_t bi = 0;
    std::size_t bj = 0;
    std::size_t fan_in = 0;
};

// Number of distinct weight matrices a layer decomposes into.
std::size_t slot_count(const LayerSpec& spec);
// Rows x cols of the slot's weight matrix (rows = input side).
std::pair<std::size_t, std::size_t> slot_shape(const LayerSpec& spec, std::size_t slot);
std::size_t layer_fan_in(const LayerSpec& spec, std::size_t slot);

std::vector<PseudoTaskLocation> decompose_dense(const LayerSpec& spec, std::size_t m,
                                                std::size_t n, std::size_t layer_id = 0,
                                                std::size_t ell_start = 0,
                                                OverflowPolicy policy = OverflowPolicy::Strict);
std::vector<PseudoTaskLocation> decompose_conv(const LayerSpec& spec, std::size_t m,
                                               std::size_t n, std::size_t layer_id = 0,
                                               std::size_t ell_start = 0,
                                               OverflowPolicy policy = OverflowPolicy::Strict);
std::vector<PseudoTaskLocation> decompose_lstm(const LayerSpec& spec, std::size_t m,
                                               std::size_t n, std::size_t layer_id = 0,
                                               std::size_t ell_start = 0,
                                               OverflowPolicy policy = OverflowPolicy::Strict);

// Walks the architecture in order, skipping adapter layers (the first and
// last layer of an architecture are always treated as adapters). Returns
// locations with contiguous global indices.
std::vector<PseudoTaskLocation> decompose_architecture(
    const std::vector<LayerSpec>& layers, std::size_t m, std::size_t n,
    OverflowPolicy policy = OverflowPolicy::Strict);

// Copies the (bi, bj) tile out of a slot weight matrix.
Array extract_block(const Array& matrix, const PseudoTaskLocation& loc, std::size_t m,
                    std::size_t n);

// Inverse of decompose+extract: rebuilds all slot matrices of one layer from
// blocks keyed by location index into `locations`. Every location of the
// layer must be present exactly once.
std::vector<Array> assemble_layer(const LayerSpec& spec, std::size_t layer_id, std::size_t m,
                                  std::size_t n,
                                  const std::vector<PseudoTaskLocation>& locations,
                                  const std::map<std::size_t, Array>& blocks_by_ell);

struct LayerReport {
    std::string name;
    std::size_t block_count = 0;
    std::size_t param_count = 0;
    bool adapter = false;
};

struct DecomposeReport {
    std::vector<LayerReport> layers;
    std::size_t total_blocks = 0;
    std::size_t total_params_decomposed = 0;
};

DecomposeReport decompose_report(const std::vector<LayerSpec>& layers, std::size_t m,
                                 std::size_t n, OverflowPolicy policy = OverflowPolicy::Strict);

}  // namespace muir
