#pragma once

#include <cstdint>
#include <vector>

#include "cmf/volume.hpp"

namespace cmf {

enum class ScribbleMode {
    kManualSim,  // simulated hand-drawn foreground + background curves
    kAutoBg,     // erosion-derived background curves, same foreground
};

/// Per-role coverage targets as fractions of all image voxels.
struct ScribbleTargets {
    double foreground = 0.0004;      // per foreground class
    double background = 0.0008;      // manual-sim background
    double auto_background = 0.0006; // auto-bg background
};

/// What the generator actually achieved; classes whose regions were too thin
/// to skeletonize in every slice are listed, not failed on.
struct ScribbleReport {
    std::vector<int> skipped_classes;
    std::vector<double> class_fraction;  // indexed by class id, image-voxel fraction
    double background_fraction = 0.0;
};

/// Generates sparse scribble annotations from dense ground truth.
///
/// Foreground scribbles are per-axial-slice skeleton curves strictly inside
/// each class region, subsampled to the coverage target. Background scribbles
/// are seeded random-walk curves; in auto-bg mode they are confined to the
/// eroded complement of the foreground dilated by kAutoBgRadius voxels.
/// Everything else is ScribbleMask::kIgnore. Deterministic in seed.
ScribbleMask gen_scribbles(const LabelMask& gt, ScribbleMode mode, std::uint64_t seed,
                           const ScribbleTargets& targets = {},
                           ScribbleReport* report = nullptr);

/// Euclidean clearance (voxels) enforced between auto-bg scribbles and any
/// foreground voxel.
inline constexpr double kAutoBgRadius = 3.0;

/// Counts scribble voxels that contradict gt: foreground scribbles whose gt
/// class differs, or background scribbles sitting on foreground gt.
std::int64_t count_scribble_violations(const ScribbleMask& scribble, const LabelMask& gt);

}  // namespace cmf
