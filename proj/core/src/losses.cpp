#include "cmf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmf/parallel.hpp"
#include "cmf/rng.hpp"

namespace cmf {

void CrfConfig::validate() const {
    if (kernels.empty()) throw ConfigError("CRF config needs at least one kernel");
    for (const auto& k : kernels) {
        if (k.weight <= 0.0 || k.sigma_spatial <= 0.0)
            throw ConfigError("CRF kernel weights and spatial sigmas must be > 0");
        if (k.kind == CrfKernelKind::kBilateral && k.sigma_intensity <= 0.0)
            throw ConfigError("bilateral CRF kernels need sigma_intensity > 0");
    }
    if (max_pixels_per_slice < 0)
        throw ConfigError("max_pixels_per_slice must be >= 0");
}

template <typename T>
T pce_loss(const T* y, MapDims dims, const std::uint8_t* labels, bool sum_mode, T* dy,
           T grad_scale) {
    const std::int64_t n = dims.spatial();
    std::int64_t labeled = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint8_t s = labels[i];
        if (s == 255) continue;
        if (int(s) >= dims.c)
            throw ValidationError("scribble label " + std::to_string(int(s)) +
                                  " >= num_classes " + std::to_string(dims.c));
        ++labeled;
    }
    if (labeled == 0) return T(0);

    constexpr double kClamp = 1e-12;
    double acc = 0.0;
    const double norm = sum_mode ? 1.0 : 1.0 / double(labeled);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint8_t s = labels[i];
        if (s == 255) continue;
        const double p = double(y[std::int64_t(s) * n + i]);
        acc += -std::log(std::max(p, kClamp));
        if (dy && p > kClamp)
            dy[std::int64_t(s) * n + i] += grad_scale * T(-norm / p);
    }
    return T(acc * norm);
}

template <typename T>
T ssl_loss(const T* y_ct, const T* y_mr, const T* y_mm, MapDims dims,
           const std::uint8_t* labels, bool sum_mode, T* d_yct, T* d_ymr, T* d_ymm,
           T grad_scale) {
    const T a = pce_loss(y_ct, dims, labels, sum_mode, d_yct, grad_scale);
    const T b = pce_loss(y_mr, dims, labels, sum_mode, d_ymr, grad_scale);
    const T c = pce_loss(y_mm, dims, labels, sum_mode, d_ymm, grad_scale);
    return a + b + c;
}

namespace {

// Seeded subset of [0, n) of size m (partial Fisher-Yates), ascending order.
std::vector<int> sample_pixels(int n, int m, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::mix(seed, 0x5A11CEull));
    for (int i = 0; i < m; ++i) {
        const int j = i + int(rng.next_below(std::uint64_t(n - i)));
        std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    idx.resize(std::size_t(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

template <typename T>
T crf_loss_2d(const T* y, int num_classes, int h, int w, const T* img, const CrfConfig& cfg,
              T* dy, std::uint64_t slice_seed, T grad_scale) {
    cfg.validate();
    const int n_all = h * w;
    for (int i = 0; i < n_all; ++i)
        if (!std::isfinite(double(img[i])))
            throw ValidationError("CRF slice has non-finite intensities");

    std::vector<int> pixels;
    if (cfg.max_pixels_per_slice > 0 && n_all > cfg.max_pixels_per_slice)
        pixels = sample_pixels(n_all, cfg.max_pixels_per_slice, slice_seed);
    else {
        pixels.resize(std::size_t(n_all));
        std::iota(pixels.begin(), pixels.end(), 0);
    }
    const int n = int(pixels.size());
    if (n < 2 && cfg.exclude_self_pairs) return T(0);

    // Spatial kernel factors depend only on (|dr|, |dc|): precompute rows.
    const int n_kernels = int(cfg.kernels.size());
    std::vector<std::vector<double>> lut(static_cast<std::size_t>(n_kernels));
    for (int k = 0; k < n_kernels; ++k) {
        auto& row = lut[std::size_t(k)];
        row.resize(std::size_t(h) * std::size_t(w));
        const double inv2s2 = 0.5 / (cfg.kernels[std::size_t(k)].sigma_spatial *
                                     cfg.kernels[std::size_t(k)].sigma_spatial);
        for (int dr = 0; dr < h; ++dr)
            for (int dc = 0; dc < w; ++dc)
                row[std::size_t(dr) * w + dc] =
                    std::exp(-(double(dr) * dr + double(dc) * dc) * inv2s2);
    }

    std::vector<double> ssum(std::size_t(n), 0.0);
    std::vector<double> tsum(std::size_t(n) * std::size_t(num_classes), 0.0);
    const std::int64_t plane = std::int64_t(h) * w;

    for (int a = 0; a < n; ++a) {
        const int pa = pixels[std::size_t(a)];
        const int ra = pa / w, ca = pa % w;
        const double ia = double(img[pa]);
        for (int b = a + 1; b < n; ++b) {
            const int pb = pixels[std::size_t(b)];
            const int rb = pb / w, cb = pb % w;
            const double di = ia - double(img[pb]);
            const std::size_t off = std::size_t(std::abs(ra - rb)) * w + std::abs(ca - cb);
            double kij = 0.0;
            for (int k = 0; k < n_kernels; ++k) {
                const auto& kn = cfg.kernels[std::size_t(k)];
                double f = lut[std::size_t(k)][off];
                if (f < 1e-14) continue;
                if (kn.kind == CrfKernelKind::kBilateral)
                    f *= std::exp(-(di * di) * 0.5 / (kn.sigma_intensity * kn.sigma_intensity));
                kij += kn.weight * f;
            }
            if (kij == 0.0) continue;
            ssum[std::size_t(a)] += kij;
            ssum[std::size_t(b)] += kij;
            for (int c = 0; c < num_classes; ++c) {
                tsum[std::size_t(c) * n + a] += kij * double(y[c * plane + pb]);
                tsum[std::size_t(c) * n + b] += kij * double(y[c * plane + pa]);
            }
        }
    }

    const double pair_count = cfg.exclude_self_pairs ? double(n) * double(n - 1)
                                                     : double(n) * double(n);
    const double norm = cfg.normalize_by_pairs ? 1.0 / pair_count : 1.0;

    double self_k = 0.0;  // K_ii: every kernel factor is exp(0) = 1
    if (!cfg.exclude_self_pairs)
        for (const auto& kn : cfg.kernels) self_k += kn.weight;

    double loss = 0.0;
    for (int c = 0; c < num_classes; ++c)
        for (int a = 0; a < n; ++a) {
            const int pa = pixels[std::size_t(a)];
            const double ya = double(y[c * plane + pa]);
            loss += ya * (ssum[std::size_t(a)] - tsum[std::size_t(c) * n + a]);
            if (!cfg.exclude_self_pairs) loss += ya * (1.0 - ya) * self_k;
        }
    loss *= norm;

    if (dy) {
        for (int c = 0; c < num_classes; ++c)
            for (int a = 0; a < n; ++a) {
                const int pa = pixels[std::size_t(a)];
                double g = ssum[std::size_t(a)] - 2.0 * tsum[std::size_t(c) * n + a];
                if (!cfg.exclude_self_pairs)
                    g += (1.0 - 2.0 * double(y[c * plane + pa])) * self_k;
                dy[c * plane + pa] += grad_scale * T(norm * g);
            }
    }
    return T(loss);
}

namespace {

// Gathers one non-axial slice into a contiguous (c, rows, cols) scratch
// buffer, evaluates, and scatters the gradient back.
template <typename T>
double strided_slice_crf(const T* y, MapDims dims, const T* img, const CrfConfig& cfg,
                         int rows, int cols, std::int64_t row_stride, std::int64_t col_stride,
                         std::int64_t base, T* dy, std::uint64_t slice_seed, T grad_scale) {
    const std::int64_t plane = std::int64_t(rows) * cols;
    std::vector<T> ybuf(std::size_t(dims.c) * std::size_t(plane));
    std::vector<T> ibuf(static_cast<std::size_t>(plane));
    const std::int64_t spatial = dims.spatial();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const std::int64_t src = base + r * row_stride + c * col_stride;
            ibuf[std::size_t(r) * cols + c] = img[src];
            for (int ch = 0; ch < dims.c; ++ch)
                ybuf[std::size_t(ch) * plane + std::size_t(r) * cols + c] =
                    y[ch * spatial + src];
        }
    std::vector<T> gbuf;
    if (dy) gbuf.assign(ybuf.size(), T(0));
    const double loss = double(crf_loss_2d(ybuf.data(), dims.c, rows, cols, ibuf.data(), cfg,
                                           dy ? gbuf.data() : nullptr, slice_seed, grad_scale));
    if (dy) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::int64_t src = base + r * row_stride + c * col_stride;
                for (int ch = 0; ch < dims.c; ++ch)
                    dy[ch * spatial + src] +=
                        gbuf[std::size_t(ch) * plane + std::size_t(r) * cols + c];
            }
    }
    return loss;
}

}  // namespace

template <typename T>
T crf_view_loss(const T* y, MapDims dims, const T* img, CrfView view, const CrfConfig& cfg,
                T* dy, T grad_scale) {
    const std::int64_t hw = std::int64_t(dims.h) * dims.w;
    int n_slices = 0;
    switch (view) {
        case CrfView::kAxial: n_slices = dims.d; break;
        case CrfView::kSagittal: n_slices = dims.w; break;
        case CrfView::kCoronal: n_slices = dims.h; break;
    }
    std::vector<double> slice_loss(std::size_t(n_slices), 0.0);
    const T slice_scale = grad_scale / T(n_slices);

    parallel_for(n_slices, [&](int s) {
        const std::uint64_t seed =
            Rng::mix(cfg.sample_seed, (std::uint64_t(view) << 32) | std::uint64_t(s));
        switch (view) {
            case CrfView::kAxial:
                slice_loss[std::size_t(s)] =
                    strided_slice_crf(y, dims, img, cfg, dims.h, dims.w, dims.w, 1,
                                      std::int64_t(s) * hw, dy, seed, slice_scale);
                break;
            case CrfView::kSagittal:
                // fixed w = s, rows = d, cols = h
                slice_loss[std::size_t(s)] = strided_slice_crf(
                    y, dims, img, cfg, dims.d, dims.h, hw, dims.w, s, dy, seed, slice_scale);
                break;
            case CrfView::kCoronal:
                // fixed h = s, rows = d, cols = w
                slice_loss[std::size_t(s)] =
                    strided_slice_crf(y, dims, img, cfg, dims.d, dims.w, hw, 1,
                                      std::int64_t(s) * dims.w, dy, seed, slice_scale);
                break;
        }
    });

    double total = 0.0;
    for (double v : slice_loss) total += v;
    return T(total / double(n_slices));
}

template <typename T>
T mcrf_loss(const T* y, MapDims dims, const T* img, const CrfConfig& cfg, T* dy, T grad_scale) {
    const T third = grad_scale / T(3);
    const T a = crf_view_loss(y, dims, img, CrfView::kAxial, cfg, dy, third);
    const T s = crf_view_loss(y, dims, img, CrfView::kSagittal, cfg, dy, third);
    const T c = crf_view_loss(y, dims, img, CrfView::kCoronal, cfg, dy, third);
    return (a + s + c) / T(3);
}

template <typename T>
T imr_loss(const T* y_mm, MapDims dims, const T* ct, const T* mr, const LossWeights& w,
           const CrfConfig& cfg, T* d_ymm, T grad_scale) {
    T loss = T(0);
    if (w.lambda_ct != 0.0)
        loss += T(w.lambda_ct) *
                mcrf_loss(y_mm, dims, ct, cfg, d_ymm, grad_scale * T(w.lambda_ct));
    if (w.lambda_mr != 0.0)
        loss += T(w.lambda_mr) *
                mcrf_loss(y_mm, dims, mr, cfg, d_ymm, grad_scale * T(w.lambda_mr));
    return loss;
}

template <typename T>
T imc_loss(const T* y_mm, const T* y_ct, const T* y_mr, MapDims dims, const LossWeights& w,
           bool detach_reference, T* d_ymm, T* d_yct, T* d_ymr, T grad_scale) {
    const std::int64_t total = dims.total();
    const double inv = 1.0 / double(total);
    double acc_ct = 0.0, acc_mr = 0.0;
    for (std::int64_t i = 0; i < total; ++i) {
        const double dct = double(y_mm[i]) - double(y_ct[i]);
        const double dmr = double(y_mm[i]) - double(y_mr[i]);
        acc_ct += dct * dct;
        acc_mr += dmr * dmr;
        const double gct = w.alpha1 * 2.0 * dct * inv;
        const double gmr = w.alpha2 * 2.0 * dmr * inv;
        if (d_ymm && !detach_reference) d_ymm[i] += grad_scale * T(gct + gmr);
        if (d_yct) d_yct[i] += grad_scale * T(-gct);
        if (d_ymr) d_ymr[i] += grad_scale * T(-gmr);
    }
    return T(w.alpha1 * acc_ct * inv + w.alpha2 * acc_mr * inv);
}

template <typename T>
LossBreakdown total_loss(const T* y_ct, const T* y_mr, const T* y_mm, MapDims dims,
                         const std::uint8_t* scribble, const T* ct_img, const T* mr_img,
                         const LossWeights& w, const CrfConfig& cfg, const LossToggles& toggles,
                         bool imc_detach, bool pce_sum, T* d_yct, T* d_ymr, T* d_ymm) {
    if (!toggles.ssl && !toggles.imr && !toggles.imc)
        throw ConfigError("total_loss: every loss term is disabled");
    LossBreakdown out;
    if (toggles.ssl)
        out.ssl = double(ssl_loss(y_ct, y_mr, y_mm, dims, scribble, pce_sum, d_yct, d_ymr,
                                  d_ymm, T(1)));
    if (toggles.imr)
        out.imr = double(imr_loss(y_mm, dims, ct_img, mr_img, w, cfg, d_ymm, T(1)));
    if (toggles.imc)
        out.imc = double(imc_loss(y_mm, y_ct, y_mr, dims, w, imc_detach, d_ymm, d_yct, d_ymr,
                                  T(1)));
    out.total = out.ssl + out.imr + out.imc;
    return out;
}

template <typename T>
void softmax_channels(const T* scores, MapDims dims, T* y) {
    const std::int64_t n = dims.spatial();
    for (std::int64_t i = 0; i < n; ++i) {
        double mx = -1e300;
        for (int c = 0; c < dims.c; ++c) mx = std::max(mx, double(scores[c * n + i]));
        double z = 0.0;
        for (int c = 0; c < dims.c; ++c) z += std::exp(double(scores[c * n + i]) - mx);
        const double inv = 1.0 / z;
        for (int c = 0; c < dims.c; ++c)
            y[c * n + i] = T(std::exp(double(scores[c * n + i]) - mx) * inv);
    }
}

template <typename T>
void softmax_backward(const T* y, const T* dLdy, MapDims dims, T* dLdz) {
    const std::int64_t n = dims.spatial();
    for (std::int64_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int c = 0; c < dims.c; ++c) dot += double(y[c * n + i]) * double(dLdy[c * n + i]);
        for (int c = 0; c < dims.c; ++c)
            dLdz[c * n + i] += T(double(y[c * n + i]) * (double(dLdy[c * n + i]) - dot));
    }
}

// clang-format off
template float  pce_loss<float>(const float*, MapDims, const std::uint8_t*, bool, float*, float);
template double pce_loss<double>(const double*, MapDims, const std::uint8_t*, bool, double*, double);
template float  ssl_loss<float>(const float*, const float*, const float*, MapDims, const std::uint8_t*, bool, float*, float*, float*, float);
template double ssl_loss<double>(const double*, const double*, const double*, MapDims, const std::uint8_t*, bool, double*, double*, double*, double);
template float  crf_loss_2d<float>(const float*, int, int, int, const float*, const CrfConfig&, float*, std::uint64_t, float);
template double crf_loss_2d<double>(const double*, int, int, int, const double*, const CrfConfig&, double*, std::uint64_t, double);
template float  crf_view_loss<float>(const float*, MapDims, const float*, CrfView, const CrfConfig&, float*, float);
template double crf_view_loss<double>(const double*, MapDims, const double*, CrfView, const CrfConfig&, double*, double);
template float  mcrf_loss<float>(const float*, MapDims, const float*, const CrfConfig&, float*, float);
template double mcrf_loss<double>(const double*, MapDims, const double*, const CrfConfig&, double*, double);
template float  imr_loss<float>(const float*, MapDims, const float*, const float*, const LossWeights&, const CrfConfig&, float*, float);
template double imr_loss<double>(const double*, MapDims, const double*, const double*, const LossWeights&, const CrfConfig&, double*, double);
template float  imc_loss<float>(const float*, const float*, const float*, MapDims, const LossWeights&, bool, float*, float*, float*, float);
template double imc_loss<double>(const double*, const double*, const double*, MapDims, const LossWeights&, bool, double*, double*, double*, double);
template LossBreakdown total_loss<float>(const float*, const float*, const float*, MapDims, const std::uint8_t*, const float*, const float*, const LossWeights&, const CrfConfig&, const LossToggles&, bool, bool, float*, float*, float*);
template LossBreakdown total_loss<double>(const double*, const double*, const double*, MapDims, const std::uint8_t*, const double*, const double*, const LossWeights&, const CrfConfig&, const LossToggles&, bool, bool, double*, double*, double*);
template void softmax_channels<float>(const float*, MapDims, float*);
template void softmax_channels<double>(const double*, MapDims, double*);
template void softmax_backward<float>(const float*, const float*, MapDims, float*);
template void softmax_backward<double>(const double*, const double*, MapDims, double*);
// clang-format on

}  // namespace cmf
