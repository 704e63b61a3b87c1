#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmf/types.hpp"

namespace cmf {

/// A 3D scalar grid with per-axis voxel spacing in mm. Values are stored in
/// (d, h, w) order with w fastest.
struct Volume {
    Dims3 dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<float> values;

    Volume() = default;
    Volume(Dims3 dm, Vec3 sp = {1.0, 1.0, 1.0}, Vec3 og = {0.0, 0.0, 0.0})
        : dims(dm), spacing(sp), origin(og), values(std::size_t(dm.voxels()), 0.0f) {}

    std::int64_t index(int d, int h, int w) const {
        return (std::int64_t(d) * dims.h + h) * dims.w + w;
    }
    float& at(int d, int h, int w) { return values[std::size_t(index(d, h, w))]; }
    float at(int d, int h, int w) const { return values[std::size_t(index(d, h, w))]; }

    /// Throws ValidationError if dims/spacing are out of contract or any
    /// value is non-finite.
    void validate() const;
};

/// Dense per-voxel class labels in [0, num_classes).
struct LabelMask {
    Dims3 dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<std::uint8_t> values;
    int num_classes = 2;

    LabelMask() = default;
    LabelMask(Dims3 dm, int nc, Vec3 sp = {1.0, 1.0, 1.0})
        : dims(dm), spacing(sp), values(std::size_t(dm.voxels()), 0), num_classes(nc) {}

    std::int64_t index(int d, int h, int w) const {
        return (std::int64_t(d) * dims.h + h) * dims.w + w;
    }
    std::uint8_t& at(int d, int h, int w) { return values[std::size_t(index(d, h, w))]; }
    std::uint8_t at(int d, int h, int w) const { return values[std::size_t(index(d, h, w))]; }

    void validate() const;
};

/// Sparse voxel labels: values are class ids in [0, num_classes) where a
/// scribble passes and kIgnore everywhere else.
struct ScribbleMask {
    static constexpr std::uint8_t kIgnore = 255;

    Dims3 dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<std::uint8_t> values;
    int num_classes = 2;

    ScribbleMask() = default;
    ScribbleMask(Dims3 dm, int nc, Vec3 sp = {1.0, 1.0, 1.0})
        : dims(dm), spacing(sp), values(std::size_t(dm.voxels()), kIgnore), num_classes(nc) {}

    std::int64_t index(int d, int h, int w) const {
        return (std::int64_t(d) * dims.h + h) * dims.w + w;
    }
    std::uint8_t& at(int d, int h, int w) { return values[std::size_t(index(d, h, w))]; }
    std::uint8_t at(int d, int h, int w) const { return values[std::size_t(index(d, h, w))]; }

    std::int64_t labeled_count() const;
    double labeled_fraction() const {
        return dims.voxels() > 0 ? double(labeled_count()) / double(dims.voxels()) : 0.0;
    }

    void validate() const;
};

/// One registered CT/MR case with optional dense ground truth and scribbles.
/// All members share dims and spacing.
struct ModalityPair {
    Volume ct;
    Volume mr;
    std::optional<LabelMask> gt;
    std::optional<ScribbleMask> scribble;
    std::string case_id;

    Dims3 dims() const { return ct.dims; }

    /// Checks member alignment (dims and spacing) and member validity.
    void validate() const;
};

}  // namespace cmf
