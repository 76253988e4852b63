#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "muir/errors.hpp"

namespace muir {

// Dense row-major array of doubles. Small by design: this project's tensors
// top out at c x m x n hypermodules.
class Array {
  public:
    Array() = default;

    explicit Array(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), 0.0);
    }

    Array(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_))
            throw shape_error("Array: data length does not match shape");
    }

    static Array scalar(double v) { return Array({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t ndim() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t i, std::size_t j) {
        return data_[i * shape_[1] + j];
    }
    double at2(std::size_t i, std::size_t j) const {
        return data_[i * shape_[1] + j];
    }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Array& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// FNV-1a over raw bytes; used for artifact and snapshot checksums.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t checksum(const Array& a, std::uint64_t h = 0xcbf29ce484222325ULL) {
    h = fnv1a64(a.shape().data(), a.shape().size() * sizeof(std::size_t), h);
    return fnv1a64(a.data(), a.size() * sizeof(double), h);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace muir
