#include "cmf/volume.hpp"

#include <cmath>

namespace cmf {

void Volume::validate() const {
    if (dims.d < 1 || dims.h < 1 || dims.w < 1)
        throw ValidationError("volume dims must all be >= 1, got " + to_string(dims));
    if (spacing.d <= 0.0 || spacing.h <= 0.0 || spacing.w <= 0.0)
        throw ValidationError("volume spacing components must be > 0");
    if (values.size() != std::size_t(dims.voxels()))
        throw ValidationError("volume value count does not match dims");
    for (float x : values) {
        if (!std::isfinite(x)) throw ValidationError("volume contains non-finite intensities");
    }
}

void LabelMask::validate() const {
    if (dims.d < 1 || dims.h < 1 || dims.w < 1)
        throw ValidationError("mask dims must all be >= 1");
    if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
    if (values.size() != std::size_t(dims.voxels()))
        throw ValidationError("mask value count does not match dims");
    for (std::uint8_t v : values) {
        if (v >= num_classes)
            throw ValidationError("label value " + std::to_string(int(v)) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
    }
}

std::int64_t ScribbleMask::labeled_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : values)
        if (v != kIgnore) ++n;
    return n;
}

void ScribbleMask::validate() const {
    if (dims.d < 1 || dims.h < 1 || dims.w < 1)
        throw ValidationError("scribble dims must all be >= 1");
    if (num_classes < 2 || num_classes > 255)
        throw ValidationError("scribble num_classes must be in [2, 255]");
    if (values.size() != std::size_t(dims.voxels()))
        throw ValidationError("scribble value count does not match dims");
    for (std::uint8_t v : values) {
        if (v != kIgnore && v >= num_classes)
            throw ValidationError("scribble label " + std::to_string(int(v)) + " out of range");
    }
}

void ModalityPair::validate() const {
    ct.validate();
    mr.validate();
    if (!(ct.dims == mr.dims) || !(ct.spacing == mr.spacing))
        throw ValidationError("ct and mr are not aligned for case " + case_id);
    if (gt) {
        gt->validate();
        if (!(gt->dims == ct.dims) || !(gt->spacing == ct.spacing))
            throw ValidationError("gt is not aligned with images for case " + case_id);
    }
    if (scribble) {
        scribble->validate();
        if (!(scribble->dims == ct.dims) || !(scribble->spacing == ct.spacing))
            throw ValidationError("scribble is not aligned with images for case " + case_id);
    }
}

}  // namespace cmf
