#include "cmf/sampling.hpp"

#include <algorithm>

#include "cmf/rng.hpp"

namespace cmf {

namespace {

struct Offset {
    int d, h, w;
};

}  // namespace

ModalityPair random_crop(const ModalityPair& pair, Dims3 size, std::uint64_t seed, double bias) {
    const Dims3 dims = pair.dims();
    if (size.d > dims.d || size.h > dims.h || size.w > dims.w)
        throw ConfigError("crop size " + to_string(size) + " exceeds pair dims " +
                          to_string(dims));
    if (size.d < 1 || size.h < 1 || size.w < 1) throw ConfigError("crop size must be >= 1");

    Rng rng(Rng::mix(seed, 0xC209ull));
    Offset off{0, 0, 0};
    bool biased = false;
    if (pair.scribble && bias > 0.0 && rng.next_double() < bias) {
        // pick one labeled voxel, then a uniform window that covers it
        std::vector<std::int64_t> labeled;
        const auto& sv = pair.scribble->values;
        for (std::int64_t i = 0; i < std::int64_t(sv.size()); ++i)
            if (sv[std::size_t(i)] != ScribbleMask::kIgnore) labeled.push_back(i);
        if (!labeled.empty()) {
            const std::int64_t pick = labeled[std::size_t(rng.next_below(labeled.size()))];
            const int vd = int(pick / (std::int64_t(dims.h) * dims.w));
            const int vh = int((pick / dims.w) % dims.h);
            const int vw = int(pick % dims.w);
            const auto window = [&rng](int v, int sz, int dim) {
                const int lo = std::max(0, v - (sz - 1));
                const int hi = std::min(dim - sz, v);
                return lo + int(rng.next_below(std::uint64_t(hi - lo + 1)));
            };
            off = {window(vd, size.d, dims.d), window(vh, size.h, dims.h),
                   window(vw, size.w, dims.w)};
            biased = true;
        }
    }
    if (!biased) {
        off = {int(rng.next_below(std::uint64_t(dims.d - size.d + 1))),
               int(rng.next_below(std::uint64_t(dims.h - size.h + 1))),
               int(rng.next_below(std::uint64_t(dims.w - size.w + 1)))};
    }

    const auto copy_region = [&](const auto& src, auto& dst) {
        dst.dims = size;
        dst.values.resize(std::size_t(size.voxels()));
        for (int d = 0; d < size.d; ++d)
            for (int h = 0; h < size.h; ++h)
                std::copy_n(&src.values[std::size_t(src.index(off.d + d, off.h + h, off.w))],
                            std::size_t(size.w),
                            &dst.values[std::size_t(dst.index(d, h, 0))]);
    };

    ModalityPair out;
    out.case_id = pair.case_id;
    out.ct = pair.ct;
    out.mr = pair.mr;
    copy_region(pair.ct, out.ct);
    copy_region(pair.mr, out.mr);
    if (pair.gt) {
        out.gt = *pair.gt;
        copy_region(*pair.gt, *out.gt);
    }
    if (pair.scribble) {
        out.scribble = *pair.scribble;
        copy_region(*pair.scribble, *out.scribble);
    }
    return out;
}

namespace {

int round_up(int n, int m) { return ((n + m - 1) / m) * m; }

template <typename M>
M pad_member(const M& src, Dims3 target) {
    M out = src;
    out.dims = target;
    out.values.assign(std::size_t(target.voxels()), {});
    for (int d = 0; d < target.d; ++d) {
        const int sd = std::min(d, src.dims.d - 1);
        for (int h = 0; h < target.h; ++h) {
            const int sh = std::min(h, src.dims.h - 1);
            for (int w = 0; w < target.w; ++w) {
                const int sw = std::min(w, src.dims.w - 1);
                out.values[std::size_t(out.index(d, h, w))] =
                    src.values[std::size_t(src.index(sd, sh, sw))];
            }
        }
    }
    return out;
}

template <typename M>
M uncrop_member(const M& padded, const PadRecord& rec) {
    if (!(padded.dims == rec.padded)) throw ShapeError("uncrop: dims do not match pad record");
    M out = padded;
    out.dims = rec.original;
    out.values.resize(std::size_t(rec.original.voxels()));
    for (int d = 0; d < rec.original.d; ++d)
        for (int h = 0; h < rec.original.h; ++h)
            std::copy_n(&padded.values[std::size_t(padded.index(d, h, 0))],
                        std::size_t(rec.original.w),
                        &out.values[std::size_t(out.index(d, h, 0))]);
    return out;
}

}  // namespace

std::pair<Volume, PadRecord> pad_to_multiple(const Volume& v, int m) {
    if (m < 1) throw ConfigError("pad multiple must be >= 1");
    PadRecord rec;
    rec.original = v.dims;
    rec.padded = {round_up(v.dims.d, m), round_up(v.dims.h, m), round_up(v.dims.w, m)};
    if (rec.padded == v.dims) return {v, rec};
    return {pad_member(v, rec.padded), rec};
}

Volume uncrop(const Volume& padded, const PadRecord& rec) { return uncrop_member(padded, rec); }

LabelMask uncrop(const LabelMask& padded, const PadRecord& rec) {
    return uncrop_member(padded, rec);
}

}  // namespace cmf
