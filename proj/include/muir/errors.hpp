#pragma once

#include <stdexcept>
#include <string>

namespace muir {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension/shape disagreement between arrays.
struct shape_error : error {
    using error::error;
};

// Bad user-supplied configuration (invalid field, non-divisible layer, ...).
struct config_error : error {
    using error::error;
};

// Internal consistency violation (dangling module id, missing block, ...).
struct integrity_error : error {
    using error::error;
};

// API misuse (non-scalar loss at backward, ...).
struct contract_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

}  // namespace muir
