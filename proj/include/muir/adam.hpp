#pragma once

#include "muir/array.hpp"

namespace muir {

// Adam with the usual defaults. One state per parameter tensor; states are
// plain values so snapshot/restore is ordinary copying (bit-identical).
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    Array m;
    Array v;

    AdamState() = default;
    explicit AdamState(const std::vector<std::size_t>& shape, double lr_ = 1e-3)
        : lr(lr_), m(shape), v(shape) {}

    void step(Array& params, const Array& grads);

    // Clears moments and the step counter (used when logits restart fresh).
    void reset();
};

}  // namespace muir
