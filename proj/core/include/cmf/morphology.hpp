#pragma once

#include <cstdint>
#include <vector>

#include "cmf/types.hpp"

namespace cmf {

/// 2D binary grid (h, w), one byte per pixel, nonzero = set.
struct Grid2 {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> v;

    Grid2() = default;
    Grid2(int hh, int ww) : h(hh), w(ww), v(std::size_t(hh) * ww, 0) {}
    std::uint8_t& at(int r, int c) { return v[std::size_t(r) * w + c]; }
    std::uint8_t at(int r, int c) const { return v[std::size_t(r) * w + c]; }
};

/// 4-neighborhood erosion by one pixel; out-of-image counts as background.
Grid2 erode2d(const Grid2& g);

/// Zhang-Suen thinning to a 1-pixel-wide 8-connected skeleton.
Grid2 thin2d(const Grid2& g);

/// Squared Euclidean distance to the nearest set voxel, per voxel, with
/// anisotropic per-axis sample spacing (Felzenszwalb-Huttenlocher transform).
/// Voxels of the set itself get 0; an empty set yields a huge finite value.
std::vector<double> edt_sq(const std::vector<std::uint8_t>& set_mask, Dims3 dims, Vec3 spacing);

/// 6-connected boundary of a binary volume: set voxels with at least one
/// face neighbor outside the set (volume borders count as outside).
std::vector<std::uint8_t> boundary6(const std::vector<std::uint8_t>& set_mask, Dims3 dims);

}  // namespace cmf
