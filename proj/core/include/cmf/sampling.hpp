#pragma once

#include <cstdint>

#include "cmf/volume.hpp"

namespace cmf {

/// Default probability that a training crop is forced to contain at least
/// one scribbled voxel (when any exist).
inline constexpr double kScribbleCropBias = 0.98;

/// Crops all members of a pair at one seeded offset. When the pair carries a
/// scribble with labeled voxels, sampling is biased (probability `bias`)
/// toward windows containing at least one of them. Throws ConfigError when
/// size exceeds the pair dims.
ModalityPair random_crop(const ModalityPair& pair, Dims3 size, std::uint64_t seed,
                         double bias = kScribbleCropBias);

/// Inverse record for pad_to_multiple.
struct PadRecord {
    Dims3 original;
    Dims3 padded;
};

/// Replicate-edge pads each axis up to the next multiple of m (trailing side).
std::pair<Volume, PadRecord> pad_to_multiple(const Volume& v, int m);

/// Restores the original extent after pad_to_multiple.
Volume uncrop(const Volume& padded, const PadRecord& rec);
LabelMask uncrop(const LabelMask& padded, const PadRecord& rec);

}  // namespace cmf
