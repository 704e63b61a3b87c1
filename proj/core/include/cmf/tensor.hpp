#pragma once

#include <cstdint>
#include <vector>

#include "cmf/types.hpp"

namespace cmf {

/// Dense float tensor laid out (n, c, d, h, w), w fastest.
struct Tensor {
    int n = 0, c = 0, d = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int d_, int h_, int w_)
        : n(n_), c(c_), d(d_), h(h_), w(w_),
          v(std::size_t(std::int64_t(n_) * c_ * d_ * h_ * w_), 0.0f) {}

    std::int64_t spatial() const { return std::int64_t(d) * h * w; }
    std::int64_t count() const { return std::int64_t(n) * c * spatial(); }
    Dims3 sdims() const { return {d, h, w}; }

    float* plane(int ni, int ci) { return v.data() + (std::int64_t(ni) * c + ci) * spatial(); }
    const float* plane(int ni, int ci) const {
        return v.data() + (std::int64_t(ni) * c + ci) * spatial();
    }
    /// Pointer to one sample's (c, d, h, w) block.
    float* sample(int ni) { return v.data() + std::int64_t(ni) * c * spatial(); }
    const float* sample(int ni) const { return v.data() + std::int64_t(ni) * c * spatial(); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && d == o.d && h == o.h && w == o.w;
    }
    void zero() { std::fill(v.begin(), v.end(), 0.0f); }
};

}  // namespace cmf
