#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "cmf/losses.hpp"
#include "cmf/network.hpp"
#include "cmf/rng.hpp"

using namespace cmf;

namespace {

void fill_random(Tensor& t, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    for (auto& v : t.v) v = float(rng.gaussian() * scale);
}

// Literal loop implementations of the conv contracts, used as structural
// oracles for the GEMM paths.
struct RefConv {
    int cin, cout, k;
    bool down;
    std::vector<float> w, b;

    Dims3 out_dims(Dims3 in) const {
        if (!down) return in;
        const auto half = [](int v) { return v == 1 ? 1 : v / 2; };
        return {half(in.d), half(in.h), half(in.w)};
    }

    Tensor forward(const Tensor& x) const {
        const Dims3 od = out_dims(x.sdims());
        Tensor y(x.n, cout, od.d, od.h, od.w);
        const int pad = down ? 0 : k / 2;
        const int sd = down ? (x.d == 1 ? 1 : 2) : 1;
        const int sh = down ? (x.h == 1 ? 1 : 2) : 1;
        const int sw = down ? (x.w == 1 ? 1 : 2) : 1;
        for (int ni = 0; ni < x.n; ++ni)
            for (int co = 0; co < cout; ++co)
                for (int dd = 0; dd < od.d; ++dd)
                    for (int hh = 0; hh < od.h; ++hh)
                        for (int ww = 0; ww < od.w; ++ww) {
                            double acc = b.empty() ? 0.0 : b[std::size_t(co)];
                            for (int ci = 0; ci < cin; ++ci)
                                for (int td = 0; td < k; ++td)
                                    for (int th = 0; th < k; ++th)
                                        for (int tw = 0; tw < k; ++tw) {
                                            int src_d, src_h, src_w;
                                            if (down) {
                                                if ((x.d == 1 && td > 0) ||
                                                    (x.h == 1 && th > 0) ||
                                                    (x.w == 1 && tw > 0))
                                                    continue;
                                                src_d = dd * sd + td;
                                                src_h = hh * sh + th;
                                                src_w = ww * sw + tw;
                                            } else {
                                                src_d = dd + td - pad;
                                                src_h = hh + th - pad;
                                                src_w = ww + tw - pad;
                                            }
                                            if (src_d < 0 || src_d >= x.d || src_h < 0 ||
                                                src_h >= x.h || src_w < 0 || src_w >= x.w)
                                                continue;
                                            const float xv =
                                                x.v[std::size_t((((std::int64_t(ni) * cin +
                                                                   ci) * x.d + src_d) * x.h +
                                                                  src_h) * x.w + src_w)];
                                            const float wv =
                                                w[std::size_t((((std::int64_t(co) * cin + ci) *
                                                                    k + td) * k + th) * k + tw)];
                                            acc += double(xv) * wv;
                                        }
                            y.v[std::size_t((((std::int64_t(ni) * cout + co) * od.d + dd) *
                                             od.h + hh) * od.w + ww)] = float(acc);
                        }
        return y;
    }
};

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

}  // namespace

TEST_CASE("conv3d forward matches the loop reference (same-pad and down)") {
    for (const bool down : {false, true}) {
        for (const int k : {3, 5}) {
            if (down && k == 5) continue;
            Conv3d conv("t.conv", 3, 4, k, down, true);
            std::vector<ParamBlock*> blocks;
            conv.collect(blocks);
            for (auto* b : blocks) b->init_values(11);

            Tensor x(2, 3, 4, 6, 8);
            fill_random(x, 5);
            const Tensor y = conv.forward(x, false);

            RefConv ref{3, 4, down ? 2 : k, down, blocks[0]->w, blocks[1]->w};
            const Tensor yr = ref.forward(x);
            CHECK(y.same_shape(yr));
            CHECK(max_abs_diff(y.v, yr.v) < 1e-4);
        }
    }
}

TEST_CASE("conv3d down degrades to stride 1 on unit axes") {
    Conv3d conv("t.down", 2, 2, 2, true, false);
    std::vector<ParamBlock*> blocks;
    conv.collect(blocks);
    for (auto* b : blocks) b->init_values(3);

    Tensor x(1, 2, 1, 6, 6);  // depth axis already collapsed
    fill_random(x, 9);
    const Tensor y = conv.forward(x, false);
    CHECK(y.d == 1);
    CHECK(y.h == 3);
    CHECK(y.w == 3);

    RefConv ref{2, 2, 2, true, blocks[0]->w, {}};
    CHECK(max_abs_diff(y.v, ref.forward(x).v) < 1e-4);
}

TEST_CASE("conv3d backward matches loss finite differences") {
    // scalar loss L = sum(y * m) so dL/dy = m; checks dx, dW, db together
    for (const bool down : {false, true}) {
        Conv3d conv("t.conv", 2, 3, 3, down, true);
        std::vector<ParamBlock*> blocks;
        conv.collect(blocks);
        for (auto* b : blocks) b->init_values(21);

        Tensor x(1, 2, 4, 4, 4);
        fill_random(x, 31);
        Tensor y = conv.forward(x, true);
        Tensor m(y.n, y.c, y.d, y.h, y.w);
        fill_random(m, 41);
        const Tensor dx = conv.backward(m);

        RefConv ref{2, 3, down ? 2 : 3, down, blocks[0]->w, blocks[1]->w};
        const auto loss_at = [&](const Tensor& xx, const std::vector<float>& ww,
                                 const std::vector<float>& bb) {
            RefConv r{2, 3, down ? 2 : 3, down, ww, bb};
            const Tensor yy = r.forward(xx);
            double acc = 0.0;
            for (std::size_t i = 0; i < yy.v.size(); ++i)
                acc += double(yy.v[i]) * m.v[i];
            return acc;
        };

        const float eps = 1e-2f;
        double worst = 0.0;
        Rng pick(55);
        for (int probe = 0; probe < 12; ++probe) {
            const auto i = std::size_t(pick.next_below(x.v.size()));
            Tensor xp = x, xm = x;
            xp.v[i] += eps;
            xm.v[i] -= eps;
            const double fd =
                (loss_at(xp, blocks[0]->w, blocks[1]->w) -
                 loss_at(xm, blocks[0]->w, blocks[1]->w)) / (2.0 * eps);
            worst = std::max(worst, std::abs(fd - double(dx.v[i])));
        }
        for (int probe = 0; probe < 12; ++probe) {
            const auto i = std::size_t(pick.next_below(blocks[0]->w.size()));
            auto wp = blocks[0]->w, wm = blocks[0]->w;
            wp[i] += eps;
            wm[i] -= eps;
            const double fd =
                (loss_at(x, wp, blocks[1]->w) - loss_at(x, wm, blocks[1]->w)) / (2.0 * eps);
            worst = std::max(worst, std::abs(fd - double(blocks[0]->g[i])));
        }
        CAPTURE(down);
        CHECK(worst < 5e-2);
    }
}

TEST_CASE("transposed conv inverts the down-sampled geometry") {
    TransposedConv3d up("t.up", 4, 2, false);
    std::vector<ParamBlock*> blocks;
    up.collect(blocks);
    for (auto* b : blocks) b->init_values(7);

    Tensor x(1, 4, 3, 3, 1);
    fill_random(x, 17);
    const Tensor y = up.forward(x, {6, 6, 1}, false);  // w axis degenerate
    CHECK(y.d == 6);
    CHECK(y.h == 6);
    CHECK(y.w == 1);

    // every output voxel receives exactly one (offset, input) contribution
    Tensor ones(1, 4, 3, 3, 1);
    std::fill(ones.v.begin(), ones.v.end(), 1.0f);
    TransposedConv3d up1("t.up1", 4, 1, false);
    std::vector<ParamBlock*> b1;
    up1.collect(b1);
    std::fill(b1[0]->w.begin(), b1[0]->w.end(), 1.0f);
    const Tensor cover = up1.forward(ones, {6, 6, 1}, false);
    for (float v : cover.v) CHECK(v == doctest::Approx(4.0f));  // cin contributions each

    CHECK_THROWS_AS(up.forward(x, {5, 6, 1}, false), ShapeError);
}

TEST_CASE("one-hot conv kernel with unit PReLU slope passes a channel through") {
    Conv3d conv("t.sel", 3, 1, 3, false, true);
    PReLU act("t.act", 1);
    std::vector<ParamBlock*> blocks;
    conv.collect(blocks);
    act.collect(blocks);
    // weight = 1 at the center tap of input channel 1, zero elsewhere
    std::fill(blocks[0]->w.begin(), blocks[0]->w.end(), 0.0f);
    const int center = (1 * 27) + 13;  // channel 1, tap (1,1,1)
    blocks[0]->w[std::size_t(center)] = 1.0f;
    std::fill(blocks[1]->w.begin(), blocks[1]->w.end(), 0.0f);  // bias
    std::fill(blocks[2]->w.begin(), blocks[2]->w.end(), 1.0f);  // slope 1

    Tensor x(1, 3, 3, 4, 5);
    fill_random(x, 23);
    const Tensor y = act.forward(conv.forward(x, false), false);
    for (std::int64_t i = 0; i < x.spatial(); ++i)
        CHECK(y.v[std::size_t(i)] == doctest::Approx(x.plane(0, 1)[i]));
}

TEST_CASE("zero input with zero bias stays zero through conv + PReLU") {
    Conv3d conv("t.z", 4, 4, 3, false, true);
    PReLU act("t.za", 4);
    std::vector<ParamBlock*> blocks;
    conv.collect(blocks);
    act.collect(blocks);
    for (auto* b : blocks) b->init_values(2);
    std::fill(blocks[1]->w.begin(), blocks[1]->w.end(), 0.0f);

    Tensor x(1, 4, 4, 4, 4);  // zeros
    const Tensor y = act.forward(conv.forward(x, false), false);
    for (float v : y.v) CHECK(v == 0.0f);
}

TEST_CASE("default model matches the published single-branch size") {
    NetworkConfig cfg;  // CT3/MR4, base 16, kernel 5
    CmfModel model(cfg);
    const double ct_params = double(model.count_params("ct"));
    CHECK(ct_params > 0.85 * 7.94e6);
    CHECK(ct_params < 1.15 * 7.94e6);
}

TEST_CASE("count_params equals a brute-force recount over named blocks") {
    NetworkConfig cfg;
    cfg.base_channels = 4;
    cfg.branch_kernel = 3;
    CmfModel model(cfg);
    std::size_t recount = 0;
    std::map<std::string, int> seen;
    for (auto* b : model.params()) {
        std::size_t n = 1;
        for (int s : b->shape) n *= std::size_t(s);
        CHECK(n == b->count());
        recount += n;
        seen[b->name] += 1;
    }
    for (const auto& [name, times] : seen) {
        CAPTURE(name);
        CHECK(times == 1);  // stable unique names
    }
    CHECK(recount == model.count_params());
}

TEST_CASE("toggles only add parameters and never touch the branches") {
    NetworkConfig mfl;
    mfl.base_channels = 4;
    mfl.branch_kernel = 3;
    mfl.enable_cff = false;
    mfl.enable_cfe = false;
    NetworkConfig cfe = mfl;
    cfe.enable_cfe = true;
    NetworkConfig full = cfe;
    full.enable_cff = true;

    CmfModel m_mfl(mfl), m_cfe(cfe), m_full(full);
    CHECK(m_mfl.count_params() < m_cfe.count_params());
    CHECK(m_cfe.count_params() < m_full.count_params());
    CHECK(m_mfl.count_params("ct") == m_full.count_params("ct"));
    CHECK(m_mfl.count_params("mr") == m_full.count_params("mr"));
}

TEST_CASE("forward shape contract and probability simplex") {
    NetworkConfig cfg;
    cfg.base_channels = 4;  // keep the unit test light
    cfg.branch_kernel = 3;
    cfg.num_classes = 3;
    CmfModel model(cfg);
    model.init_params(1);

    Tensor ct(1, 1, 32, 32, 16), mr(1, 1, 32, 32, 16);
    fill_random(ct, 3, 0.5);
    fill_random(mr, 4, 0.5);
    const auto out = model.forward(ct, mr, false, 0, true);

    for (const Tensor* t : {&out.probs.y_ct, &out.probs.y_mr, &out.probs.y_mm}) {
        CHECK(t->sdims() == ct.sdims());
        CHECK(t->c == 3);
        for (std::int64_t i = 0; i < t->spatial(); ++i) {
            double sum = 0.0;
            for (int c = 0; c < t->c; ++c) {
                const float p = t->plane(0, c)[i];
                CHECK(p >= 0.0f);
                sum += p;
            }
            if (i % 97 == 0) CHECK(std::abs(sum - 1.0) < 1e-5);
        }
    }

    // halving law through the pyramid
    CHECK(out.f_ct[1].sdims() == Dims3{16, 16, 8});
    CHECK(out.f_ct[2].sdims() == Dims3{8, 8, 4});
    CHECK(out.f_ct[3].sdims() == Dims3{4, 4, 2});
    CHECK(out.f_mr[4].sdims() == Dims3{2, 2, 1});
    CHECK(out.f_mm[3].sdims() == out.f_ct[3].sdims());
}

TEST_CASE("non-divisible input dims are rejected with a padding hint") {
    NetworkConfig cfg;
    cfg.base_channels = 2;
    cfg.branch_kernel = 3;
    CmfModel model(cfg);
    Tensor ct(1, 1, 20, 20, 10), mr(1, 1, 20, 20, 10);
    CHECK_THROWS_AS(model.forward(ct, mr), ShapeError);
    try {
        model.forward(ct, mr);
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("pad_to_multiple") != std::string::npos);
    }
}

TEST_CASE("single-modality mode ignores the mr argument") {
    NetworkConfig cfg;
    cfg.base_channels = 2;
    cfg.branch_kernel = 3;
    cfg.single_modality = true;
    CmfModel model(cfg);
    model.init_params(9);

    Tensor ct(1, 1, 16, 16, 16), junk(1, 1, 16, 16, 16);
    fill_random(ct, 5, 0.5);
    fill_random(junk, 6, 10.0);
    const auto a = model.forward(ct, ct);
    const auto b = model.forward(ct, junk);
    CHECK(a.probs.y_mm.v == b.probs.y_mm.v);
    CHECK(a.probs.y_mr.v == b.probs.y_mr.v);
}

TEST_CASE("all structural variants build and run") {
    for (const bool cff : {false, true})
        for (const bool cfe : {false, true}) {
            NetworkConfig cfg;
            cfg.base_channels = 2;
            cfg.branch_kernel = 3;
            cfg.enable_cff = cff;
            cfg.enable_cfe = cfe;
            CmfModel model(cfg);
            model.init_params(4);
            Tensor ct(1, 1, 16, 16, 16), mr(1, 1, 16, 16, 16);
            fill_random(ct, 7, 0.5);
            fill_random(mr, 8, 0.5);
            const auto out = model.forward(ct, mr);
            CAPTURE(cff);
            CAPTURE(cfe);
            CHECK(out.probs.y_mm.sdims() == ct.sdims());
        }

    for (const int ct_depth : {3, 4, 5, 6}) {
        NetworkConfig cfg;
        cfg.base_channels = 2;
        cfg.branch_kernel = 3;
        cfg.ct_depth = ct_depth;
        cfg.mr_depth = 9 - ct_depth;  // sweep the other way too
        CmfModel model(cfg);
        model.init_params(4);
        Tensor ct(1, 1, 16, 16, 16), mr(1, 1, 16, 16, 16);
        fill_random(ct, 7, 0.5);
        fill_random(mr, 8, 0.5);
        const auto out = model.forward(ct, mr);
        CAPTURE(ct_depth);
        CHECK(out.probs.y_mm.sdims() == ct.sdims());
    }
}

TEST_CASE("invalid configurations are rejected") {
    NetworkConfig cfg;
    cfg.ct_depth = 2;
    CHECK_THROWS_AS(CmfModel{cfg}, ConfigError);
    cfg = NetworkConfig{};
    cfg.num_classes = 1;
    CHECK_THROWS_AS(CmfModel{cfg}, ConfigError);
    cfg = NetworkConfig{};
    cfg.branch_kernel = 4;
    CHECK_THROWS_AS(CmfModel{cfg}, ConfigError);
}

TEST_CASE("every parameter block receives gradient from the total loss") {
    NetworkConfig cfg;
    cfg.base_channels = 4;
    cfg.branch_kernel = 3;
    cfg.num_classes = 2;
    CmfModel model(cfg);
    model.init_params(13);
    model.zero_grads();

    // 32x32x16 keeps the deepest feature planes above one voxel, so the
    // instance norms stay non-degenerate
    Tensor ct(1, 1, 32, 32, 16), mr(1, 1, 32, 32, 16);
    fill_random(ct, 15, 0.5);
    fill_random(mr, 16, 0.5);
    const auto out = model.forward(ct, mr, /*train=*/true, /*step_seed=*/3);

    const MapDims md{cfg.num_classes, 32, 32, 16};
    std::vector<std::uint8_t> scribble(std::size_t(md.spatial()), 255);
    Rng rng(17);
    for (int i = 0; i < 40; ++i)
        scribble[std::size_t(rng.next_below(std::uint64_t(md.spatial())))] =
            std::uint8_t(rng.next_below(2));

    // normalize images into [0,1] for the CRF kernels
    std::vector<float> ct01(std::size_t(md.spatial())), mr01(ct01.size());
    for (std::size_t i = 0; i < ct01.size(); ++i) {
        ct01[i] = 0.5f + 0.1f * ct.v[i];
        mr01[i] = 0.5f + 0.1f * mr.v[i];
    }

    CrfConfig crf;
    crf.max_pixels_per_slice = 64;
    std::vector<float> d_yct(out.probs.y_ct.v.size(), 0.0f);
    std::vector<float> d_ymr(d_yct.size(), 0.0f), d_ymm(d_yct.size(), 0.0f);
    total_loss(out.probs.y_ct.sample(0), out.probs.y_mr.sample(0), out.probs.y_mm.sample(0),
               md, scribble.data(), ct01.data(), mr01.data(), LossWeights{}, crf,
               LossToggles{}, false, false, d_yct.data(), d_ymr.data(), d_ymm.data());

    Tensor dz_ct(1, md.c, md.d, md.h, md.w), dz_mr = dz_ct, dz_mm = dz_ct;
    softmax_backward(out.probs.y_ct.sample(0), d_yct.data(), md, dz_ct.sample(0));
    softmax_backward(out.probs.y_mr.sample(0), d_ymr.data(), md, dz_mr.sample(0));
    softmax_backward(out.probs.y_mm.sample(0), d_ymm.data(), md, dz_mm.sample(0));
    model.backward(dz_ct, dz_mr, dz_mm);

    for (auto* b : model.params()) {
        double norm = 0.0;
        for (float g : b->g) norm += std::abs(double(g));
        CAPTURE(b->name);
        CHECK(norm > 0.0);
    }
}

TEST_CASE("initialization and forward are deterministic in the seed") {
    NetworkConfig cfg;
    cfg.base_channels = 2;
    cfg.branch_kernel = 3;
    CmfModel a(cfg), b(cfg);
    a.init_params(42);
    b.init_params(42);
    Tensor ct(1, 1, 16, 16, 16), mr(1, 1, 16, 16, 16);
    fill_random(ct, 1, 0.5);
    fill_random(mr, 2, 0.5);
    CHECK(a.forward(ct, mr).probs.y_mm.v == b.forward(ct, mr).probs.y_mm.v);

    CmfModel c(cfg);
    c.init_params(43);
    CHECK(a.forward(ct, mr).probs.y_mm.v != c.forward(ct, mr).probs.y_mm.v);
}
