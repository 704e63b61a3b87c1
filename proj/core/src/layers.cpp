#include "cmf/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "cmf/parallel.hpp"
#include "cmf/rng.hpp"

namespace cmf {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using StrideMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr int kRowChunk = 64;  // (d,h) rows per GEMM chunk

}  // namespace

void ParamBlock::setup(std::string nm, std::vector<int> shp, Init kind, double arg) {
    name = std::move(nm);
    shape = std::move(shp);
    std::int64_t total = 1;
    for (int s : shape) total *= s;
    w.assign(std::size_t(total), 0.0f);
    g.assign(std::size_t(total), 0.0f);
    init = kind;
    init_arg = arg;
}

void ParamBlock::init_values(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, fnv1a(name)));
    switch (init) {
        case Init::kZeros:
            std::fill(w.begin(), w.end(), 0.0f);
            break;
        case Init::kOnes:
            std::fill(w.begin(), w.end(), 1.0f);
            break;
        case Init::kConst:
            std::fill(w.begin(), w.end(), float(init_arg));
            break;
        case Init::kHeNormal: {
            const double std_dev = std::sqrt(2.0 / init_arg);
            for (auto& x : w) x = float(rng.gaussian() * std_dev);
            break;
        }
    }
    adam_m.clear();
    adam_v.clear();
}

// ---------------------------------------------------------------- Conv3d

Conv3d::Conv3d(std::string name, int cin, int cout, int kernel, bool down, bool bias)
    : cin_(cin), cout_(cout), kernel_(down ? 2 : kernel), down_(down), has_bias_(bias) {
    const int k = kernel_;
    wgt_.setup(name + ".w", {cout, cin, k, k, k}, ParamBlock::Init::kHeNormal,
               double(cin) * k * k * k);
    if (has_bias_) bias_.setup(name + ".b", {cout}, ParamBlock::Init::kZeros, 0.0);
}

Dims3 Conv3d::out_dims(Dims3 in) const {
    if (!down_) return in;
    const auto half = [](int v) {
        if (v == 1) return 1;
        if (v % 2 != 0)
            throw ShapeError("stride-2 conv needs even extents, got " + std::to_string(v));
        return v / 2;
    };
    return {half(in.d), half(in.h), half(in.w)};
}

Tensor Conv3d::forward(const Tensor& x, bool cache) {
    if (x.c != cin_) throw ShapeError("conv " + wgt_.name + ": channel mismatch");
    const Dims3 od = out_dims(x.sdims());
    Tensor y(x.n, cout_, od.d, od.h, od.w);
    const int k = kernel_;
    const int pad = down_ ? 0 : k / 2;
    const std::int64_t s_in = x.spatial();
    const std::int64_t s_out = y.spatial();

    // per-offset (cout x cin) weight matrices
    const int taps = k * k * k;
    std::vector<std::vector<float>> woff(std::size_t(taps),
                                         std::vector<float>(std::size_t(cout_) * cin_));
    for (int t = 0; t < taps; ++t)
        for (int co = 0; co < cout_; ++co)
            for (int ci = 0; ci < cin_; ++ci)
                woff[std::size_t(t)][std::size_t(co) * cin_ + ci] =
                    wgt_.w[std::size_t((std::int64_t(co) * cin_ + ci) * taps + t)];

    const int rows_out = od.d * od.h;
    const int n_chunks = (rows_out + kRowChunk - 1) / kRowChunk;

    for (int ni = 0; ni < x.n; ++ni) {
        const float* xp = x.sample(ni);
        float* yp = y.sample(ni);
        parallel_for(n_chunks, [&](int chunk) {
            const int r0 = chunk * kRowChunk;
            const int r1 = std::min(rows_out, r0 + kRowChunk);
            const std::int64_t len = std::int64_t(r1 - r0) * od.w;
            static thread_local std::vector<float> buf;
            buf.assign(std::size_t(cin_) * std::size_t(len), 0.0f);

            StrideMap ymap(yp + std::int64_t(r0) * od.w, cout_, len,
                           Eigen::OuterStride<>(Eigen::Index(s_out)));
            for (int t = 0; t < taps; ++t) {
                const int td = t / (k * k), th = (t / k) % k, tw = t % k;
                bool any = false;
                if (down_) {
                    const int sd = x.d == 1 ? 1 : 2, sh = x.h == 1 ? 1 : 2,
                              sw = x.w == 1 ? 1 : 2;
                    if ((x.d == 1 && td > 0) || (x.h == 1 && th > 0) || (x.w == 1 && tw > 0))
                        continue;
                    for (int r = r0; r < r1; ++r) {
                        const int dd = r / od.h, hh = r % od.h;
                        const int src_d = dd * sd + td, src_h = hh * sh + th;
                        for (int ci = 0; ci < cin_; ++ci) {
                            float* dst = buf.data() + std::size_t(ci) * len +
                                         std::int64_t(r - r0) * od.w;
                            const float* src = xp + std::size_t(ci) * s_in +
                                               (std::int64_t(src_d) * x.h + src_h) * x.w + tw;
                            for (int ww = 0; ww < od.w; ++ww) dst[ww] = src[ww * sw];
                        }
                    }
                    any = true;
                } else {
                    const int o_d = td - pad, o_h = th - pad, o_w = tw - pad;
                    for (int r = r0; r < r1; ++r) {
                        const int dd = r / od.h, hh = r % od.h;
                        const int src_d = dd + o_d, src_h = hh + o_h;
                        const bool valid =
                            src_d >= 0 && src_d < x.d && src_h >= 0 && src_h < x.h;
                        for (int ci = 0; ci < cin_; ++ci) {
                            float* dst = buf.data() + std::size_t(ci) * len +
                                         std::int64_t(r - r0) * od.w;
                            if (!valid) {
                                std::memset(dst, 0, std::size_t(od.w) * sizeof(float));
                                continue;
                            }
                            const float* src = xp + std::size_t(ci) * s_in +
                                               (std::int64_t(src_d) * x.h + src_h) * x.w;
                            const int w_lo = std::clamp(-o_w, 0, od.w);
                            const int w_hi = std::clamp(x.w - o_w, w_lo, od.w);
                            if (w_lo > 0) std::memset(dst, 0, std::size_t(w_lo) * sizeof(float));
                            if (w_hi > w_lo)
                                std::memcpy(dst + w_lo, src + w_lo + o_w,
                                            std::size_t(w_hi - w_lo) * sizeof(float));
                            if (w_hi < od.w)
                                std::memset(dst + w_hi, 0,
                                            std::size_t(od.w - w_hi) * sizeof(float));
                        }
                    }
                    any = true;
                }
                if (!any) continue;
                ConstMapMat wmap(woff[std::size_t(t)].data(), cout_, cin_);
                ConstMapMat bmap(buf.data(), cin_, len);
                ymap.noalias() += wmap * bmap;
            }
        });
        if (has_bias_) {
            parallel_for(cout_, [&](int co) {
                float* dst = yp + std::size_t(co) * s_out;
                const float b = bias_.w[std::size_t(co)];
                for (std::int64_t i = 0; i < s_out; ++i) dst[i] += b;
            });
        }
    }
    if (cache) x_cache_ = x;
    return y;
}

Tensor Conv3d::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    if (x.count() == 0) throw std::logic_error("conv backward without cached forward");
    const int k = kernel_;
    const int pad = down_ ? 0 : k / 2;
    const int taps = k * k * k;
    const Dims3 od = out_dims(x.sdims());
    const std::int64_t s_in = x.spatial();
    const std::int64_t s_out = std::int64_t(od.d) * od.h * od.w;
    Tensor dx(x.n, cin_, x.d, x.h, x.w);

    std::vector<std::vector<float>> woff(std::size_t(taps),
                                         std::vector<float>(std::size_t(cout_) * cin_));
    for (int t = 0; t < taps; ++t)
        for (int co = 0; co < cout_; ++co)
            for (int ci = 0; ci < cin_; ++ci)
                woff[std::size_t(t)][std::size_t(co) * cin_ + ci] =
                    wgt_.w[std::size_t((std::int64_t(co) * cin_ + ci) * taps + t)];

    for (int ni = 0; ni < x.n; ++ni) {
        const float* xp = x.sample(ni);
        const float* dyp = dy.sample(ni);
        float* dxp = dx.sample(ni);

        // weight gradients: one tap per task, full-extent GEMM
        parallel_for(taps, [&](int t) {
            const int td = t / (k * k), th = (t / k) % k, tw = t % k;
            static thread_local std::vector<float> gather;
            gather.assign(std::size_t(cin_) * std::size_t(s_out), 0.0f);
            if (down_) {
                const int sd = x.d == 1 ? 1 : 2, sh = x.h == 1 ? 1 : 2, sw = x.w == 1 ? 1 : 2;
                if ((x.d == 1 && td > 0) || (x.h == 1 && th > 0) || (x.w == 1 && tw > 0))
                    return;
                for (int dd = 0; dd < od.d; ++dd)
                    for (int hh = 0; hh < od.h; ++hh)
                        for (int ci = 0; ci < cin_; ++ci) {
                            float* dst = gather.data() + std::size_t(ci) * s_out +
                                         (std::int64_t(dd) * od.h + hh) * od.w;
                            const float* src = xp + std::size_t(ci) * s_in +
                                               (std::int64_t(dd * sd + td) * x.h + hh * sh + th) *
                                                   x.w + tw;
                            for (int ww = 0; ww < od.w; ++ww) dst[ww] = src[ww * sw];
                        }
            } else {
                const int o_d = td - pad, o_h = th - pad, o_w = tw - pad;
                for (int dd = 0; dd < od.d; ++dd) {
                    const int src_d = dd + o_d;
                    if (src_d < 0 || src_d >= x.d) continue;
                    for (int hh = 0; hh < od.h; ++hh) {
                        const int src_h = hh + o_h;
                        if (src_h < 0 || src_h >= x.h) continue;
                        const int w_lo = std::clamp(-o_w, 0, od.w);
                        const int w_hi = std::clamp(x.w - o_w, w_lo, od.w);
                        if (w_hi <= w_lo) continue;
                        for (int ci = 0; ci < cin_; ++ci)
                            std::memcpy(gather.data() + std::size_t(ci) * s_out +
                                            (std::int64_t(dd) * od.h + hh) * od.w + w_lo,
                                        xp + std::size_t(ci) * s_in +
                                            (std::int64_t(src_d) * x.h + src_h) * x.w + w_lo +
                                            o_w,
                                        std::size_t(w_hi - w_lo) * sizeof(float));
                    }
                }
            }
            ConstMapMat dym(dyp, cout_, s_out);
            ConstMapMat gm(gather.data(), cin_, s_out);
            RowMat prod = dym * gm.transpose();  // (cout x cin)
            for (int co = 0; co < cout_; ++co)
                for (int ci = 0; ci < cin_; ++ci)
                    wgt_.g[std::size_t((std::int64_t(co) * cin_ + ci) * taps + t)] +=
                        prod(co, ci);
        });

        if (has_bias_) {
            parallel_for(cout_, [&](int co) {
                const float* src = dyp + std::size_t(co) * s_out;
                double acc = 0.0;
                for (std::int64_t i = 0; i < s_out; ++i) acc += src[i];
                bias_.g[std::size_t(co)] += float(acc);
            });
        }

        // input gradients
        if (down_) {
            const int sd = x.d == 1 ? 1 : 2, sh = x.h == 1 ? 1 : 2, sw = x.w == 1 ? 1 : 2;
            parallel_for(taps, [&](int t) {
                const int td = t / (k * k), th = (t / k) % k, tw = t % k;
                if ((x.d == 1 && td > 0) || (x.h == 1 && th > 0) || (x.w == 1 && tw > 0))
                    return;
                ConstMapMat wmap(woff[std::size_t(t)].data(), cout_, cin_);
                ConstMapMat dym(dyp, cout_, s_out);
                RowMat prod = wmap.transpose() * dym;  // (cin x s_out)
                for (int dd = 0; dd < od.d; ++dd)
                    for (int hh = 0; hh < od.h; ++hh)
                        for (int ci = 0; ci < cin_; ++ci) {
                            const float* src =
                                prod.data() + (std::size_t(ci) * od.d * od.h +
                                               std::size_t(dd) * od.h + hh) * od.w;
                            float* dst = dxp + std::size_t(ci) * s_in +
                                         (std::int64_t(dd * sd + td) * x.h + hh * sh + th) *
                                             x.w + tw;
                            for (int ww = 0; ww < od.w; ++ww) dst[ww * sw] = src[ww];
                        }
            });
        } else {
            const int rows_in = x.d * x.h;
            const int n_chunks = (rows_in + kRowChunk - 1) / kRowChunk;
            parallel_for(n_chunks, [&](int chunk) {
                const int r0 = chunk * kRowChunk;
                const int r1 = std::min(rows_in, r0 + kRowChunk);
                const std::int64_t len = std::int64_t(r1 - r0) * x.w;
                static thread_local std::vector<float> buf;
                buf.assign(std::size_t(cout_) * std::size_t(len), 0.0f);
                StrideMap dxm(dxp + std::int64_t(r0) * x.w, cin_, len,
                              Eigen::OuterStride<>(Eigen::Index(s_in)));
                for (int t = 0; t < taps; ++t) {
                    const int o_d = t / (k * k) - pad, o_h = (t / k) % k - pad,
                              o_w = t % k - pad;
                    for (int r = r0; r < r1; ++r) {
                        const int dd = r / x.h, hh = r % x.h;
                        const int src_d = dd - o_d, src_h = hh - o_h;
                        const bool valid =
                            src_d >= 0 && src_d < od.d && src_h >= 0 && src_h < od.h;
                        for (int co = 0; co < cout_; ++co) {
                            float* dst = buf.data() + std::size_t(co) * len +
                                         std::int64_t(r - r0) * x.w;
                            if (!valid) {
                                std::memset(dst, 0, std::size_t(x.w) * sizeof(float));
                                continue;
                            }
                            const float* src = dyp + std::size_t(co) * s_out +
                                               (std::int64_t(src_d) * od.h + src_h) * od.w;
                            const int w_lo = std::clamp(o_w, 0, x.w);
                            const int w_hi = std::clamp(od.w + o_w, w_lo, x.w);
                            if (w_lo > 0) std::memset(dst, 0, std::size_t(w_lo) * sizeof(float));
                            if (w_hi > w_lo)
                                std::memcpy(dst + w_lo, src + w_lo - o_w,
                                            std::size_t(w_hi - w_lo) * sizeof(float));
                            if (w_hi < x.w)
                                std::memset(dst + w_hi, 0,
                                            std::size_t(x.w - w_hi) * sizeof(float));
                        }
                    }
                    ConstMapMat wmap(woff[std::size_t(t)].data(), cout_, cin_);
                    ConstMapMat bm(buf.data(), cout_, len);
                    dxm.noalias() += wmap.transpose() * bm;
                }
            });
        }
    }
    x_cache_ = Tensor();
    return dx;
}

void Conv3d::collect(std::vector<ParamBlock*>& out) {
    out.push_back(&wgt_);
    if (has_bias_) out.push_back(&bias_);
}

// ------------------------------------------------------- TransposedConv3d

TransposedConv3d::TransposedConv3d(std::string name, int cin, int cout, bool bias)
    : cin_(cin), cout_(cout), has_bias_(bias) {
    wgt_.setup(name + ".w", {cout, cin, 2, 2, 2}, ParamBlock::Init::kHeNormal,
               double(cin) * 8);
    if (has_bias_) bias_.setup(name + ".b", {cout}, ParamBlock::Init::kZeros, 0.0);
}

Tensor TransposedConv3d::forward(const Tensor& x, Dims3 target, bool cache) {
    if (x.c != cin_) throw ShapeError("transposed conv " + wgt_.name + ": channel mismatch");
    const auto check_axis = [](int in, int t) {
        if (t != in && t != 2 * in)
            throw ShapeError("transposed conv target must be the size or double per axis");
        return t == 2 * in ? 2 : 1;
    };
    const int sd = check_axis(x.d, target.d), sh = check_axis(x.h, target.h),
              sw = check_axis(x.w, target.w);
    Tensor y(x.n, cout_, target.d, target.h, target.w);
    const std::int64_t s_in = x.spatial();
    const std::int64_t s_out = y.spatial();

    for (int ni = 0; ni < x.n; ++ni) {
        const float* xp = x.sample(ni);
        float* yp = y.sample(ni);
        parallel_for(8, [&](int t) {
            const int td = t / 4, th = (t / 2) % 2, tw = t % 2;
            if ((sd == 1 && td > 0) || (sh == 1 && th > 0) || (sw == 1 && tw > 0)) return;
            std::vector<float> wmat(std::size_t(cout_) * cin_);
            for (int co = 0; co < cout_; ++co)
                for (int ci = 0; ci < cin_; ++ci)
                    wmat[std::size_t(co) * cin_ + ci] =
                        wgt_.w[std::size_t((std::int64_t(co) * cin_ + ci) * 8 + t)];
            ConstMapMat wm(wmat.data(), cout_, cin_);
            ConstMapMat xm(xp, cin_, s_in);
            RowMat prod = wm * xm;  // (cout x s_in)
            for (int co = 0; co < cout_; ++co)
                for (int dd = 0; dd < x.d; ++dd)
                    for (int hh = 0; hh < x.h; ++hh) {
                        const float* src = prod.data() +
                                           (std::size_t(co) * x.d * x.h +
                                            std::size_t(dd) * x.h + hh) * x.w;
                        float* dst = yp + std::size_t(co) * s_out +
                                     (std::int64_t(dd * sd + td) * y.h + hh * sh + th) * y.w +
                                     tw;
                        for (int ww = 0; ww < x.w; ++ww) dst[ww * sw] = src[ww];
                    }
        });
        if (has_bias_) {
            parallel_for(cout_, [&](int co) {
                float* dst = yp + std::size_t(co) * s_out;
                const float b = bias_.w[std::size_t(co)];
                for (std::int64_t i = 0; i < s_out; ++i) dst[i] += b;
            });
        }
    }
    if (cache) {
        x_cache_ = x;
        target_ = target;
    }
    return y;
}

Tensor TransposedConv3d::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    if (x.count() == 0)
        throw std::logic_error("transposed conv backward without cached forward");
    const int sd = target_.d == 2 * x.d ? 2 : 1, sh = target_.h == 2 * x.h ? 2 : 1,
              sw = target_.w == 2 * x.w ? 2 : 1;
    const std::int64_t s_in = x.spatial();
    const std::int64_t s_out = dy.spatial();
    Tensor dx(x.n, cin_, x.d, x.h, x.w);

    for (int ni = 0; ni < x.n; ++ni) {
        const float* xp = x.sample(ni);
        const float* dyp = dy.sample(ni);
        float* dxp = dx.sample(ni);

        // per-offset gathered dy, reused for both dW and dx
        std::vector<float> gather;
        for (int t = 0; t < 8; ++t) {
            const int td = t / 4, th = (t / 2) % 2, tw = t % 2;
            if ((sd == 1 && td > 0) || (sh == 1 && th > 0) || (sw == 1 && tw > 0)) continue;
            gather.assign(std::size_t(cout_) * std::size_t(s_in), 0.0f);
            parallel_for(cout_, [&](int co) {
                for (int dd = 0; dd < x.d; ++dd)
                    for (int hh = 0; hh < x.h; ++hh) {
                        float* dst = gather.data() +
                                     (std::size_t(co) * x.d * x.h + std::size_t(dd) * x.h +
                                      hh) * x.w;
                        const float* src = dyp + std::size_t(co) * s_out +
                                           (std::int64_t(dd * sd + td) * dy.h + hh * sh + th) *
                                               dy.w + tw;
                        for (int ww = 0; ww < x.w; ++ww) dst[ww] = src[ww * sw];
                    }
            });
            ConstMapMat gm(gather.data(), cout_, s_in);
            ConstMapMat xm(xp, cin_, s_in);
            RowMat dw = gm * xm.transpose();  // (cout x cin)
            for (int co = 0; co < cout_; ++co)
                for (int ci = 0; ci < cin_; ++ci)
                    wgt_.g[std::size_t((std::int64_t(co) * cin_ + ci) * 8 + t)] += dw(co, ci);

            std::vector<float> wmat(std::size_t(cout_) * cin_);
            for (int co = 0; co < cout_; ++co)
                for (int ci = 0; ci < cin_; ++ci)
                    wmat[std::size_t(co) * cin_ + ci] =
                        wgt_.w[std::size_t((std::int64_t(co) * cin_ + ci) * 8 + t)];
            ConstMapMat wm(wmat.data(), cout_, cin_);
            MapMat dxm(dxp, cin_, s_in);
            dxm.noalias() += wm.transpose() * gm;
        }

        if (has_bias_) {
            parallel_for(cout_, [&](int co) {
                const float* src = dyp + std::size_t(co) * s_out;
                double acc = 0.0;
                for (std::int64_t i = 0; i < s_out; ++i) acc += src[i];
                bias_.g[std::size_t(co)] += float(acc);
            });
        }
    }
    x_cache_ = Tensor();
    return dx;
}

void TransposedConv3d::collect(std::vector<ParamBlock*>& out) {
    out.push_back(&wgt_);
    if (has_bias_) out.push_back(&bias_);
}

// --------------------------------------------------------- InstanceNorm3d

InstanceNorm3d::InstanceNorm3d(std::string name, int channels) : channels_(channels) {
    gamma_.setup(name + ".gamma", {channels}, ParamBlock::Init::kOnes, 0.0);
    beta_.setup(name + ".beta", {channels}, ParamBlock::Init::kZeros, 0.0);
}

Tensor InstanceNorm3d::forward(const Tensor& x, bool cache) {
    constexpr double kEps = 1e-5;
    Tensor y(x.n, x.c, x.d, x.h, x.w);
    Tensor xhat(x.n, x.c, x.d, x.h, x.w);
    std::vector<float> inv_std(std::size_t(x.n) * x.c);
    const std::int64_t s = x.spatial();

    parallel_for(x.n * x.c, [&](int plane) {
        const int ni = plane / x.c, ci = plane % x.c;
        const float* xp = x.v.data() + std::int64_t(plane) * s;
        float* yp = y.v.data() + std::int64_t(plane) * s;
        float* hp = xhat.v.data() + std::int64_t(plane) * s;
        double mean = 0.0;
        for (std::int64_t i = 0; i < s; ++i) mean += xp[i];
        mean /= double(s);
        double var = 0.0;
        for (std::int64_t i = 0; i < s; ++i) var += (xp[i] - mean) * (xp[i] - mean);
        var /= double(s);
        const double inv = 1.0 / std::sqrt(var + kEps);
        inv_std[std::size_t(plane)] = float(inv);
        const float gm = gamma_.w[std::size_t(ci)], bt = beta_.w[std::size_t(ci)];
        for (std::int64_t i = 0; i < s; ++i) {
            const float xh = float((xp[i] - mean) * inv);
            hp[i] = xh;
            yp[i] = gm * xh + bt;
        }
        (void)ni;
    });
    if (cache) {
        xhat_cache_ = std::move(xhat);
        inv_std_cache_ = std::move(inv_std);
    }
    return y;
}

Tensor InstanceNorm3d::backward(const Tensor& dy) {
    const Tensor& xhat = xhat_cache_;
    if (xhat.count() == 0) throw std::logic_error("norm backward without cached forward");
    Tensor dx(dy.n, dy.c, dy.d, dy.h, dy.w);
    const std::int64_t s = dy.spatial();

    parallel_for(dy.n * dy.c, [&](int plane) {
        const int ci = plane % dy.c;
        const float* dp = dy.v.data() + std::int64_t(plane) * s;
        const float* hp = xhat.v.data() + std::int64_t(plane) * s;
        float* op = dx.v.data() + std::int64_t(plane) * s;
        double sum_dy = 0.0, sum_dyh = 0.0;
        for (std::int64_t i = 0; i < s; ++i) {
            sum_dy += dp[i];
            sum_dyh += dp[i] * double(hp[i]);
        }
        const double gm = gamma_.w[std::size_t(ci)];
        const double inv = inv_std_cache_[std::size_t(plane)];
        const double c1 = sum_dy / double(s), c2 = sum_dyh / double(s);
        for (std::int64_t i = 0; i < s; ++i)
            op[i] = float(gm * inv * (dp[i] - c1 - double(hp[i]) * c2));
    });

    parallel_for(dy.c, [&](int ci) {
        double dg = 0.0, db = 0.0;
        for (int ni = 0; ni < dy.n; ++ni) {
            const float* dp = dy.plane(ni, ci);
            const float* hp = xhat.plane(ni, ci);
            for (std::int64_t i = 0; i < s; ++i) {
                dg += dp[i] * double(hp[i]);
                db += dp[i];
            }
        }
        gamma_.g[std::size_t(ci)] += float(dg);
        beta_.g[std::size_t(ci)] += float(db);
    });

    xhat_cache_ = Tensor();
    inv_std_cache_.clear();
    return dx;
}

void InstanceNorm3d::collect(std::vector<ParamBlock*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

// ------------------------------------------------------------------ PReLU

PReLU::PReLU(std::string name, int channels) : channels_(channels) {
    alpha_.setup(name + ".alpha", {channels}, ParamBlock::Init::kConst, 0.25);
}

Tensor PReLU::forward(const Tensor& x, bool cache) {
    Tensor y(x.n, x.c, x.d, x.h, x.w);
    const std::int64_t s = x.spatial();
    parallel_for(x.n * x.c, [&](int plane) {
        const int ci = plane % x.c;
        const float a = alpha_.w[std::size_t(ci)];
        const float* xp = x.v.data() + std::int64_t(plane) * s;
        float* yp = y.v.data() + std::int64_t(plane) * s;
        for (std::int64_t i = 0; i < s; ++i) yp[i] = xp[i] > 0.0f ? xp[i] : a * xp[i];
    });
    if (cache) x_cache_ = x;
    return y;
}

Tensor PReLU::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    if (x.count() == 0) throw std::logic_error("prelu backward without cached forward");
    Tensor dx(x.n, x.c, x.d, x.h, x.w);
    const std::int64_t s = x.spatial();
    parallel_for(x.n * x.c, [&](int plane) {
        const int ci = plane % x.c;
        const float a = alpha_.w[std::size_t(ci)];
        const float* xp = x.v.data() + std::int64_t(plane) * s;
        const float* dp = dy.v.data() + std::int64_t(plane) * s;
        float* op = dx.v.data() + std::int64_t(plane) * s;
        for (std::int64_t i = 0; i < s; ++i) op[i] = xp[i] > 0.0f ? dp[i] : a * dp[i];
    });
    parallel_for(x.c, [&](int ci) {
        double da = 0.0;
        for (int ni = 0; ni < x.n; ++ni) {
            const float* xp = x.plane(ni, ci);
            const float* dp = dy.plane(ni, ci);
            for (std::int64_t i = 0; i < s; ++i)
                if (xp[i] <= 0.0f) da += double(dp[i]) * xp[i];
        }
        alpha_.g[std::size_t(ci)] += float(da);
    });
    x_cache_ = Tensor();
    return dx;
}

void PReLU::collect(std::vector<ParamBlock*>& out) { out.push_back(&alpha_); }

// ---------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, bool train, std::uint64_t seed) {
    if (!train || rate_ <= 0.0) {
        mask_cache_ = Tensor();
        return x;
    }
    Tensor y(x.n, x.c, x.d, x.h, x.w);
    Tensor mask(x.n, x.c, x.d, x.h, x.w);
    Rng rng(Rng::mix(seed, 0xD209ull));
    const float keep_scale = float(1.0 / (1.0 - rate_));
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        const float m = rng.next_double() >= rate_ ? keep_scale : 0.0f;
        mask.v[i] = m;
        y.v[i] = x.v[i] * m;
    }
    mask_cache_ = std::move(mask);
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (mask_cache_.count() == 0) return dy;
    Tensor dx(dy.n, dy.c, dy.d, dy.h, dy.w);
    for (std::size_t i = 0; i < dy.v.size(); ++i) dx.v[i] = dy.v[i] * mask_cache_.v[i];
    mask_cache_ = Tensor();
    return dx;
}

// ------------------------------------------------------------- utilities

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || !(a.sdims() == b.sdims()))
        throw ShapeError("concat_channels: shape mismatch");
    Tensor y(a.n, a.c + b.c, a.d, a.h, a.w);
    const std::int64_t s = a.spatial();
    for (int ni = 0; ni < a.n; ++ni) {
        std::memcpy(y.sample(ni), a.sample(ni), std::size_t(a.c) * s * sizeof(float));
        std::memcpy(y.sample(ni) + std::int64_t(a.c) * s, b.sample(ni),
                    std::size_t(b.c) * s * sizeof(float));
    }
    return y;
}

void split_channels(const Tensor& dy, int ca, Tensor& da, Tensor& db) {
    const int cb = dy.c - ca;
    da = Tensor(dy.n, ca, dy.d, dy.h, dy.w);
    db = Tensor(dy.n, cb, dy.d, dy.h, dy.w);
    const std::int64_t s = dy.spatial();
    for (int ni = 0; ni < dy.n; ++ni) {
        std::memcpy(da.sample(ni), dy.sample(ni), std::size_t(ca) * s * sizeof(float));
        std::memcpy(db.sample(ni), dy.sample(ni) + std::int64_t(ca) * s,
                    std::size_t(cb) * s * sizeof(float));
    }
}

void add_inplace(Tensor& y, const Tensor& x) {
    if (!y.same_shape(x)) throw ShapeError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
}

}  // namespace cmf
