#include "cmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmf/rng.hpp"

namespace cmf {

namespace {

struct Blob {
    double cd, ch, cw;        // center (voxels)
    double rd, rh, rw;        // radii (voxels)
    double wob_amp;           // radial wobble amplitude
    double kd[3], kh[3], kw[3], phase[3];  // wobble wave vectors
    int label;

    double field(double d, double h, double w) const {
        const double xd = (d - cd) / rd;
        const double xh = (h - ch) / rh;
        const double xw = (w - cw) / rw;
        double wob = 0.0;
        for (int i = 0; i < 3; ++i)
            wob += std::cos(kd[i] * d + kh[i] * h + kw[i] * w + phase[i]);
        return 1.0 - (xd * xd + xh * xh + xw * xw) + wob_amp * wob / 3.0;
    }
};

void separable_gaussian_blur(std::vector<float>& v, Dims3 dims, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(std::size_t(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[std::size_t(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        ksum += kernel[std::size_t(i + radius)];
    }
    for (auto& k : kernel) k /= ksum;

    std::vector<float> tmp(v.size());
    const int sizes[3] = {dims.d, dims.h, dims.w};
    const std::int64_t strides[3] = {std::int64_t(dims.h) * dims.w, dims.w, 1};
    for (int axis = 0; axis < 3; ++axis) {
        const int n = sizes[axis];
        const std::int64_t stride = strides[axis];
        for (std::int64_t base = 0; base < std::int64_t(v.size()); ++base) {
            // walk only the first voxel of each line
            const std::int64_t coord = (base / stride) % n;
            if (coord != 0) continue;
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int j = std::clamp(i + k, 0, n - 1);  // reflect-free edge clamp
                    acc += kernel[std::size_t(k + radius)] * v[std::size_t(base + j * stride)];
                }
                tmp[std::size_t(base + i * stride)] = float(acc);
            }
        }
        std::swap(v, tmp);
    }
}

void minmax_normalize(std::vector<float>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const float span = *hi - *lo;
    if (span <= 0.0f) {
        std::fill(v.begin(), v.end(), 0.0f);
        return;
    }
    for (auto& x : v) x = (x - *lo) / span;
}

}  // namespace

ModalityPair synth_pair(std::uint64_t seed, Dims3 dims, int n_objects, int num_classes,
                        const SynthParams& params) {
    if (dims.d < 8 || dims.h < 8 || dims.w < 8)
        throw ConfigError("synth_pair requires dims >= 8 per axis, got " + to_string(dims));
    if (n_objects < 1 || n_objects > 5)
        throw ConfigError("synth_pair requires 1 <= n_objects <= 5");
    if (num_classes < 2 || num_classes > 255)
        throw ConfigError("synth_pair requires num_classes in [2, 255]");

    Rng rng(Rng::mix(seed, 0x53594E5448ull));  // independent of caller streams

    // Place blobs with pairwise separation so components stay distinct.
    std::vector<Blob> blobs;
    const double axis[3] = {double(dims.d), double(dims.h), double(dims.w)};
    for (int obj = 0; obj < n_objects; ++obj) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            Blob b;
            b.rd = std::max(1.5, (params.min_radius_frac +
                                  (params.max_radius_frac - params.min_radius_frac) *
                                      rng.next_double()) * axis[0]);
            b.rh = std::max(1.5, (params.min_radius_frac +
                                  (params.max_radius_frac - params.min_radius_frac) *
                                      rng.next_double()) * axis[1]);
            b.rw = std::max(1.5, (params.min_radius_frac +
                                  (params.max_radius_frac - params.min_radius_frac) *
                                      rng.next_double()) * axis[2]);
            b.cd = b.rd + 1.0 + rng.next_double() * (axis[0] - 2.0 * (b.rd + 1.0));
            b.ch = b.rh + 1.0 + rng.next_double() * (axis[1] - 2.0 * (b.rh + 1.0));
            b.cw = b.rw + 1.0 + rng.next_double() * (axis[2] - 2.0 * (b.rw + 1.0));
            if (axis[0] - 2.0 * (b.rd + 1.0) < 0.0 || axis[1] - 2.0 * (b.rh + 1.0) < 0.0 ||
                axis[2] - 2.0 * (b.rw + 1.0) < 0.0)
                continue;  // radius does not fit, retry
            bool ok = true;
            for (const Blob& other : blobs) {
                const double dd = (b.cd - other.cd) / (b.rd + other.rd);
                const double dh = (b.ch - other.ch) / (b.rh + other.rh);
                const double dw = (b.cw - other.cw) / (b.rw + other.rw);
                if (dd * dd + dh * dh + dw * dw < 1.2) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            b.wob_amp = params.shape_wobble * rng.next_double();
            for (int i = 0; i < 3; ++i) {
                b.kd[i] = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[0] * 2.0;
                b.kh[i] = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[1] * 2.0;
                b.kw[i] = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[2] * 2.0;
                b.phase[i] = rng.next_double() * 6.283185307179586;
            }
            b.label = 1 + (obj % (num_classes - 1));
            blobs.push_back(b);
            placed = true;
        }
        if (!placed)
            throw GenerationError("could not place " + std::to_string(n_objects) +
                                  " objects inside " + to_string(dims));
    }

    // Background look-alikes, visible in exactly one modality. They never
    // enter gt: appearance alone cannot separate them, the paired modality
    // can.
    struct Distractor {
        double cd, ch, cw, rd, rh, rw;
        bool in_ct;

        bool contains(int d, int h, int w) const {
            const double xd = (d - cd) / rd, xh = (h - ch) / rh, xw = (w - cw) / rw;
            return xd * xd + xh * xh + xw * xw < 1.0;
        }
    };
    std::vector<Distractor> distractors;
    const int want_ct = params.ct_distractors, want_mr = params.mr_distractors;
    for (int k = 0; k < want_ct + want_mr; ++k) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Distractor dt;
            dt.rh = params.distractor_radius_lo +
                    rng.next_double() *
                        (params.distractor_radius_hi - params.distractor_radius_lo);
            dt.rw = params.distractor_radius_lo +
                    rng.next_double() *
                        (params.distractor_radius_hi - params.distractor_radius_lo);
            dt.rd = std::max(1.0, 0.6 * dt.rh);
            dt.cd = dt.rd + 1.0 + rng.next_double() * (axis[0] - 2.0 * (dt.rd + 1.0));
            dt.ch = dt.rh + 1.0 + rng.next_double() * (axis[1] - 2.0 * (dt.rh + 1.0));
            dt.cw = dt.rw + 1.0 + rng.next_double() * (axis[2] - 2.0 * (dt.rw + 1.0));
            dt.in_ct = k < want_ct;
            bool clear = true;
            for (const Blob& b : blobs)
                if (b.field(dt.cd, dt.ch, dt.cw) > -0.8) clear = false;
            for (const Distractor& other : distractors) {
                const double dd = dt.cd - other.cd, dh = dt.ch - other.ch,
                             dw = dt.cw - other.cw;
                if (dd * dd + dh * dh + dw * dw <
                    (dt.rh + other.rh + 2.0) * (dt.rh + other.rh + 2.0))
                    clear = false;
            }
            if (!clear) continue;
            distractors.push_back(dt);
            break;
        }
    }

    ModalityPair pair;
    pair.case_id = "synth-" + std::to_string(seed);
    pair.ct = Volume(dims);
    pair.mr = Volume(dims);
    LabelMask gt(dims, num_classes);

    // Rasterize: last blob with positive field wins.
    for (int d = 0; d < dims.d; ++d)
        for (int h = 0; h < dims.h; ++h)
            for (int w = 0; w < dims.w; ++w) {
                std::uint8_t label = 0;
                for (const Blob& b : blobs)
                    if (b.field(d, h, w) > 0.0) label = std::uint8_t(b.label);
                gt.at(d, h, w) = label;
            }

    const auto distractor_class = [&](int d, int h, int w, bool ct_side) {
        for (const Distractor& dt : distractors)
            if (dt.in_ct == ct_side && dt.contains(d, h, w)) return 1;
        return 0;
    };

    // Complementary visibility field: CT contrast follows V, MR follows 1-V.
    const double vk_d = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[0];
    const double vk_h = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[1];
    const double vk_w = (rng.next_double() - 0.5) * 2.0 * 6.283185307179586 / axis[2];
    const double v_phase = rng.next_double() * 6.283185307179586;
    const auto visibility = [&](int d, int h, int w) {
        return 0.5 + 0.5 * std::cos(vk_d * d + vk_h * h + vk_w * w + v_phase);
    };
    const double vfloor = params.visibility_floor;

    // CT: sharp piecewise class intensities + additive noise.
    const auto ct_level = [&](int c) {
        return c == 0 ? 0.25 : 0.45 + 0.40 * double(c) / double(num_classes - 1);
    };
    for (int d = 0; d < dims.d; ++d)
        for (int h = 0; h < dims.h; ++h)
            for (int w = 0; w < dims.w; ++w) {
                const auto i = std::size_t(pair.ct.index(d, h, w));
                const int cls = gt.values[i] != 0 ? gt.values[i]
                                                  : distractor_class(d, h, w, true);
                const double mix = vfloor + (1.0 - vfloor) * visibility(d, h, w);
                const double level =
                    ct_level(0) + (ct_level(cls) - ct_level(0)) * mix;
                pair.ct.values[i] =
                    float(level + params.ct_noise_sigma * rng.gaussian());
            }
    minmax_normalize(pair.ct.values);

    // MR: smooth monotone mapping of the same gt, low-frequency bias, noise.
    const auto mr_level = [&](int c) {
        return c == 0 ? 0.30 : 0.30 + 0.55 * std::sqrt(double(c) / double(num_classes - 1));
    };
    for (int d = 0; d < dims.d; ++d)
        for (int h = 0; h < dims.h; ++h)
            for (int w = 0; w < dims.w; ++w) {
                const auto i = std::size_t(pair.mr.index(d, h, w));
                const int cls = gt.values[i] != 0 ? gt.values[i]
                                                  : distractor_class(d, h, w, false);
                const double mix = vfloor + (1.0 - vfloor) * (1.0 - visibility(d, h, w));
                pair.mr.values[i] =
                    float(mr_level(0) + (mr_level(cls) - mr_level(0)) * mix);
            }
    separable_gaussian_blur(pair.mr.values, dims, params.mr_blur_sigma);

    const double bd = rng.next_double() * 6.283185307179586;
    const double bh = rng.next_double() * 6.283185307179586;
    const double bw = rng.next_double() * 6.283185307179586;
    for (int d = 0; d < dims.d; ++d)
        for (int h = 0; h < dims.h; ++h)
            for (int w = 0; w < dims.w; ++w) {
                const double bias =
                    1.0 + params.mr_bias_amplitude *
                              std::cos(6.283185307179586 *
                                           (0.5 * d / axis[0] + 0.7 * h / axis[1] +
                                            0.6 * w / axis[2]) +
                                       bd + 0.3 * std::sin(bh + 6.283185307179586 * w /
                                                                     axis[2] * 0.8 + bw));
                const auto idx = std::size_t(pair.mr.index(d, h, w));
                pair.mr.values[idx] = float(pair.mr.values[idx] * bias +
                                            params.mr_noise_sigma * rng.gaussian());
            }
    minmax_normalize(pair.mr.values);

    pair.gt = std::move(gt);
    pair.validate();
    return pair;
}

}  // namespace cmf
