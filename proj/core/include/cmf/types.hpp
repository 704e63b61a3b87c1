#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cmf {

/// Usage / configuration problems (bad flag combinations, invalid settings).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file headers or sidecars.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid header but inconsistent payload (wrong byte count, ...).
struct CorruptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inputs violating a documented precondition (labels out of range, NaNs, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor/volume shape mismatches.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Synthetic data generation failures (objects do not fit, ...).
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Volume dimensions, indexed (d, h, w) with w fastest.
struct Dims3 {
    int d = 0;
    int h = 0;
    int w = 0;

    std::int64_t voxels() const { return std::int64_t(d) * h * w; }
    bool operator==(const Dims3&) const = default;
};

/// Per-axis physical quantity (spacing or origin), same (d, h, w) order as Dims3.
struct Vec3 {
    double d = 0.0;
    double h = 0.0;
    double w = 0.0;

    bool operator==(const Vec3&) const = default;
};

inline std::string to_string(const Dims3& x) {
    return std::to_string(x.d) + "x" + std::to_string(x.h) + "x" + std::to_string(x.w);
}

}  // namespace cmf
