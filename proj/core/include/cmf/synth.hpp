#pragma once

#include <cstdint>

#include "cmf/volume.hpp"

namespace cmf {

/// Knobs for the paired-modality phantom generator. The defaults are what the
/// synthetic benchmark uses; tests freeze against them.
///
/// Distractors are small background blobs that carry foreground-like
/// intensity in exactly one modality. They make appearance ambiguous for a
/// single modality while staying resolvable from the registered pair, which
/// is the regime the cross-modal losses exist for.
struct SynthParams {
    double ct_noise_sigma = 0.10;      // additive Gaussian noise on CT
    double mr_noise_sigma = 0.05;      // additive Gaussian noise on MR
    double mr_blur_sigma = 1.8;        // Gaussian blur (voxels) on MR before bias
    double mr_bias_amplitude = 0.30;   // multiplicative low-frequency bias field
    double shape_wobble = 0.35;        // radial perturbation strength of blobs
    double min_radius_frac = 0.10;     // blob radius range as fraction of axis size
    double max_radius_frac = 0.22;
    int ct_distractors = 8;            // CT-only background look-alikes
    int mr_distractors = 8;            // MR-only background look-alikes
    double distractor_radius_lo = 1.5; // in-plane radius range (voxels)
    double distractor_radius_hi = 3.5;
    // Complementary contrast: a low-frequency field scales the CT foreground
    // contrast by [visibility_floor, 1] and the MR contrast by the reversed
    // field, so every boundary segment is crisp in one modality and washed
    // out in the other.
    double visibility_floor = 0.25;
};

/// Generates one registered CT/MR pair with dense ground truth.
///
/// The gt holds n_objects smooth blob components (classes cycle through
/// 1..num_classes-1). CT is a sharp piecewise mapping of gt plus additive
/// noise; MR is a smooth monotone mapping of the same gt, modulated by a
/// low-frequency bias field, plus noise. Both are min-max normalized to
/// [0, 1]. Deterministic in (seed, dims, n_objects, num_classes).
///
/// Throws GenerationError when the dims cannot host the requested objects and
/// ConfigError on out-of-contract arguments (dims < 8, n_objects outside
/// [1, 5], num_classes < 2).
ModalityPair synth_pair(std::uint64_t seed, Dims3 dims, int n_objects, int num_classes,
                        const SynthParams& params = {});

}  // namespace cmf
