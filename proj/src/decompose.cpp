#include "muir/decompose.hpp"

#include "muir/errors.hpp"

namespace muir {

namespace {

void check_divisible(const LayerSpec& spec, std::size_t rows, std::size_t cols, std::size_t m,
                     std::size_t n, OverflowPolicy policy) {
    if (policy == OverflowPolicy::Strict && (rows % m != 0 || cols % n != 0))
        throw config_error("layer '" + spec.name + "': " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " not divisible by " + std::to_string(m) + "x" +
                           std::to_string(n));
}

std::vector<PseudoTaskLocation> tile_slots(const LayerSpec& spec, std::size_t m, std::size_t n,
                                           std::size_t layer_id, std::size_t ell_start,
                                           OverflowPolicy policy) {
    std::vector<PseudoTaskLocation> out;
    std::size_t ell = ell_start;
    const std::size_t slots = slot_count(spec);
    for (std::size_t slot = 0; slot < slots; ++slot) {
        const auto [rows, cols] = slot_shape(spec, slot);
        check_divisible(spec, rows, cols, m, n, policy);
        const std::size_t p = rows / m, q = cols / n;
        const std::size_t fi = layer_fan_in(spec, slot);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < q; ++j)
                out.push_back({ell++, layer_id, slot, i, j, fi});
    }
    return out;
}

}  // namespace

std::size_t slot_count(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::Dense: return 1;
        case LayerKind::Conv1d: return spec.kernel_w;
        case LayerKind::Conv2d: return spec.kernel_h * spec.kernel_w;
        case LayerKind::Lstm: return 8;
    }
    throw config_error("unknown layer kind");
}

std::pair<std::size_t, std::size_t> slot_shape(const LayerSpec& spec, std::size_t slot) {
    if (slot >= slot_count(spec)) throw contract_error("slot_shape: slot out of range");
    switch (spec.kind) {
        case LayerKind::Dense: return {spec.in, spec.out};
        case LayerKind::Conv1d:
        case LayerKind::Conv2d: return {spec.in, spec.out};
        case LayerKind::Lstm:
            // slots 0-3: input-to-hidden gate matrices; 4-7: hidden-to-hidden
            return slot < 4 ? std::pair<std::size_t, std::size_t>{spec.in, spec.out}
                            : std::pair<std::size_t, std::size_t>{spec.out, spec.out};
    }
    throw config_error("unknown layer kind");
}

std::size_t layer_fan_in(const LayerSpec& spec, std::size_t slot) {
    switch (spec.kind) {
        case LayerKind::Dense: return spec.in;
        case LayerKind::Conv1d:
        case LayerKind::Conv2d: return spec.in * spec.receptive_field();
        case LayerKind::Lstm: return slot < 4 ? spec.in : spec.out;
    }
    throw config_error("unknown layer kind");
}

std::vector<PseudoTaskLocation> decompose_dense(const LayerSpec& spec, std::size_t m,
                                                std::size_t n, std::size_t layer_id,
                                                std::size_t ell_start, OverflowPolicy policy) {
    if (spec.kind != LayerKind::Dense) throw contract_error("decompose_dense: wrong kind");
    return tile_slots(spec, m, n, layer_id, ell_start, policy);
}

std::vector<PseudoTaskLocation> decompose_conv(const LayerSpec& spec, std::size_t m,
                                               std::size_t n, std::size_t layer_id,
                                               std::size_t ell_start, OverflowPolicy policy) {
    if (spec.kind != LayerKind::Conv1d && spec.kind != LayerKind::Conv2d)
        throw contract_error("decompose_conv: wrong kind");
    return tile_slots(spec, m, n, layer_id, ell_start, policy);
}

std::vector<PseudoTaskLocation> decompose_lstm(const LayerSpec& spec, std::size_t m,
                                               std::size_t n, std::size_t layer_id,
                                               std::size_t ell_start, OverflowPolicy policy) {
    if (spec.kind != LayerKind::Lstm) throw contract_error("decompose_lstm: wrong kind");
    return tile_slots(spec, m, n, layer_id, ell_start, policy);
}

std::vector<PseudoTaskLocation> decompose_architecture(const std::vector<LayerSpec>& layers,
                                                       std::size_t m, std::size_t n,
                                                       OverflowPolicy policy) {
    std::vector<PseudoTaskLocation> out;
    for (std::size_t id = 0; id < layers.size(); ++id) {
        const bool reserved = id == 0 || id + 1 == layers.size();
        if (reserved || layers[id].adapter) continue;
        auto locs = tile_slots(layers[id], m, n, id, out.size(), policy);
        out.insert(out.end(), locs.begin(), locs.end());
    }
    return out;
}

Array extract_block(const Array& matrix, const PseudoTaskLocation& loc, std::size_t m,
                    std::size_t n) {
    if (matrix.ndim() != 2) throw shape_error("extract_block: matrix expected");
    const std::size_t rows = matrix.shape()[0], cols = matrix.shape()[1];
    if ((loc.bi + 1) * m > rows || (loc.bj + 1) * n > cols)
        throw integrity_error("extract_block: tile out of range");
    Array block({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            block.at2(i, j) = matrix.at2(loc.bi * m + i, loc.bj * n + j);
    return block;
}

std::vector<Array> assemble_layer(const LayerSpec& spec, std::size_t layer_id, std::size_t m,
                                  std::size_t n,
                                  const std::vector<PseudoTaskLocation>& locations,
                                  const std::map<std::size_t, Array>& blocks_by_ell) {
    std::vector<Array> out;
    for (std::size_t slot = 0; slot < slot_count(spec); ++slot) {
        const auto [rows, cols] = slot_shape(spec, slot);
        out.emplace_back(std::vector<std::size_t>{rows, cols});
    }
    std::vector<bool> seen;
    std::size_t expected = 0;
    for (const auto& loc : locations) {
        if (loc.layer_id != layer_id) continue;
        ++expected;
        auto it = blocks_by_ell.find(loc.ell);
        if (it == blocks_by_ell.end())
            throw integrity_error("assemble_layer: missing block at location " +
                                  std::to_string(loc.ell));
        const Array& block = it->second;
        if (block.ndim() != 2 || block.shape()[0] != m || block.shape()[1] != n)
            throw shape_error("assemble_layer: block has wrong shape");
        Array& target = out[loc.slot];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                target.at2(loc.bi * m + i, loc.bj * n + j) = block.at2(i, j);
        if (seen.size() <= loc.ell) seen.resize(loc.ell + 1, false);
        if (seen[loc.ell]) throw integrity_error("assemble_layer: duplicate block");
        seen[loc.ell] = true;
    }
    if (expected == 0) throw integrity_error("assemble_layer: no locations for layer");
    return out;
}

DecomposeReport decompose_report(const std::vector<LayerSpec>& layers, std::size_t m,
                                 std::size_t n, OverflowPolicy policy) {
    DecomposeReport report;
    const auto locations = decompose_architecture(layers, m, n, policy);
    for (std::size_t id = 0; id < layers.size(); ++id) {
        LayerReport lr;
        lr.name = layers[id].name;
        lr.adapter = id == 0 || id + 1 == layers.size() || layers[id].adapter;
        std::size_t params = 0;
        for (std::size_t slot = 0; slot < slot_count(layers[id]); ++slot) {
            const auto [rows, cols] = slot_shape(layers[id], slot);
            params += rows * cols;
        }
        lr.param_count = params;
        for (const auto& loc : locations)
            if (loc.layer_id == id) ++lr.block_count;
        report.layers.push_back(lr);
        report.total_blocks += lr.block_count;
        if (!lr.adapter) report.total_params_decomposed += params;
    }
    return report;
}

}  // namespace muir
