#include "muir/adam.hpp"

#include <cmath>

#include "muir/errors.hpp"

namespace muir {

void AdamState::step(Array& params, const Array& grads) {
    if (!params.same_shape(m) || !grads.same_shape(m))
        throw shape_error("AdamState::step: shape mismatch");
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void AdamState::reset() {
    m.fill(0.0);
    v.fill(0.0);
    step_count = 0;
}

}  // namespace muir
