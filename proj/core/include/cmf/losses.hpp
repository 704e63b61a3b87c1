#pragma once

#include <cstdint>
#include <vector>

#include "cmf/types.hpp"

namespace cmf {

/// Shape of a per-voxel class-probability map laid out (c, d, h, w),
/// w fastest.
struct MapDims {
    int c = 0;
    int d = 0;
    int h = 0;
    int w = 0;

    std::int64_t spatial() const { return std::int64_t(d) * h * w; }
    std::int64_t total() const { return std::int64_t(c) * spatial(); }
    bool operator==(const MapDims&) const = default;
};

/// Weights of the hybrid objective; defaults match the published settings.
struct LossWeights {
    double lambda_ct = 0.2;
    double lambda_mr = 0.2;
    double alpha1 = 0.8;
    double alpha2 = 0.8;
};

enum class CrfKernelKind { kBilateral, kSpatial };

struct CrfKernel {
    double weight = 1.0;
    CrfKernelKind kind = CrfKernelKind::kBilateral;
    double sigma_spatial = 5.0;    // voxels
    double sigma_intensity = 0.1;  // normalized intensity units (bilateral only)
};

/// Pairwise-energy configuration. Dense evaluation is exact per 2D slice;
/// max_pixels_per_slice > 0 bounds the cost of large slices by evaluating a
/// seeded pixel subset (pair normalization then uses the subset size).
struct CrfConfig {
    std::vector<CrfKernel> kernels{
        {1.0, CrfKernelKind::kBilateral, 5.0, 0.1},
        {1.0, CrfKernelKind::kSpatial, 3.0, 0.0},
    };
    bool exclude_self_pairs = true;
    bool normalize_by_pairs = true;
    int max_pixels_per_slice = 0;
    std::uint64_t sample_seed = 0;

    void validate() const;
};

enum class CrfView { kAxial = 0, kSagittal = 1, kCoronal = 2 };

/// All loss functions accumulate (+=) into the optional gradient buffers so
/// terms compose; callers zero the buffers. `grad_scale` pre-multiplies the
/// accumulated gradient without affecting the returned value.

/// Partial cross-entropy over scribbled voxels: mean (or sum when sum_mode)
/// of -log y at the labeled class, probabilities clamped at 1e-12. Returns 0
/// when nothing is labeled. Throws ValidationError on out-of-range labels.
template <typename T>
T pce_loss(const T* y, MapDims dims, const std::uint8_t* labels, bool sum_mode = false,
           T* dy = nullptr, T grad_scale = T(1));

/// Scribble-supervised loss: pce over each of the three branch predictions.
template <typename T>
T ssl_loss(const T* y_ct, const T* y_mr, const T* y_mm, MapDims dims,
           const std::uint8_t* labels, bool sum_mode = false, T* d_yct = nullptr,
           T* d_ymr = nullptr, T* d_ymm = nullptr, T grad_scale = T(1));

/// Dense pairwise energy of one 2D slice: sum over classes and ordered pixel
/// pairs of y_i (1 - y_j) K_ij, divided by the ordered-pair count when
/// normalize_by_pairs. y is (num_classes, h, w); img is (h, w) in [0, 1].
template <typename T>
T crf_loss_2d(const T* y, int num_classes, int h, int w, const T* img, const CrfConfig& cfg,
              T* dy = nullptr, std::uint64_t slice_seed = 0, T grad_scale = T(1));

/// Mean crf_loss_2d over all slices of one view of a volume.
template <typename T>
T crf_view_loss(const T* y, MapDims dims, const T* img, CrfView view, const CrfConfig& cfg,
                T* dy = nullptr, T grad_scale = T(1));

/// Multi-view CRF: mean of the axial, sagittal, and coronal view terms.
template <typename T>
T mcrf_loss(const T* y, MapDims dims, const T* img, const CrfConfig& cfg, T* dy = nullptr,
            T grad_scale = T(1));

/// Intra-modal regularization: lambda_ct * mcrf(y_mm | ct) +
/// lambda_mr * mcrf(y_mm | mr).
template <typename T>
T imr_loss(const T* y_mm, MapDims dims, const T* ct, const T* mr, const LossWeights& w,
           const CrfConfig& cfg, T* d_ymm = nullptr, T grad_scale = T(1));

/// Inter-modal consistency: alpha1 * mean((y_mm - y_ct)^2) +
/// alpha2 * mean((y_mm - y_mr)^2), mean over voxels x classes. When
/// detach_reference, y_mm receives no gradient.
template <typename T>
T imc_loss(const T* y_mm, const T* y_ct, const T* y_mr, MapDims dims, const LossWeights& w,
           bool detach_reference = false, T* d_ymm = nullptr, T* d_yct = nullptr,
           T* d_ymr = nullptr, T grad_scale = T(1));

struct LossToggles {
    bool ssl = true;
    bool imr = true;
    bool imc = true;
};

struct LossBreakdown {
    double ssl = 0.0;
    double imr = 0.0;
    double imc = 0.0;
    double total = 0.0;
};

/// The hybrid objective: sum of the enabled terms with per-term breakdown.
/// Throws ConfigError when every term is disabled.
template <typename T>
LossBreakdown total_loss(const T* y_ct, const T* y_mr, const T* y_mm, MapDims dims,
                         const std::uint8_t* scribble, const T* ct_img, const T* mr_img,
                         const LossWeights& w, const CrfConfig& cfg, const LossToggles& toggles,
                         bool imc_detach = false, bool pce_sum = false, T* d_yct = nullptr,
                         T* d_ymr = nullptr, T* d_ymm = nullptr);

/// Channel softmax per voxel; scores and probabilities are (c, d, h, w).
template <typename T>
void softmax_channels(const T* scores, MapDims dims, T* y);

/// Maps dL/dy to dL/dscores through the channel softmax (accumulates).
template <typename T>
void softmax_backward(const T* y, const T* dLdy, MapDims dims, T* dLdz);

}  // namespace cmf
