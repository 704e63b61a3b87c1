#include "cmf/network.hpp"

#include <algorithm>

#include "cmf/losses.hpp"
#include "cmf/rng.hpp"

namespace cmf {

Dims3 halve_dims(Dims3 in) {
    const auto half = [](int v) { return v == 1 ? 1 : v / 2; };
    return {half(in.d), half(in.h), half(in.w)};
}

void NetworkConfig::validate() const {
    if (num_classes < 2 || num_classes > 255)
        throw ConfigError("num_classes must be in [2, 255]");
    if (ct_depth < 3 || ct_depth > 6 || mr_depth < 3 || mr_depth > 6)
        throw ConfigError("branch depths must be in [3, 6]");
    if (base_channels < 1 || base_channels > 64)
        throw ConfigError("base_channels must be in [1, 64]");
    if (branch_kernel != 1 && branch_kernel != 3 && branch_kernel != 5)
        throw ConfigError("branch_kernel must be 1, 3, or 5");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout_rate must be in [0, 1)");
}

// ---------------------------------------------------------------- ConvBlock

ConvBlock::ConvBlock(const std::string& name, int cin, int cout, int kernel, bool norm_on)
    : conv(name + ".conv", cin, cout, kernel, false, !norm_on),
      norm(norm_on ? InstanceNorm3d(name + ".norm", cout) : InstanceNorm3d()),
      act(name + ".act", cout),
      use_norm(norm_on) {}

Tensor ConvBlock::forward(const Tensor& x, bool cache) {
    Tensor t = conv.forward(x, cache);
    if (use_norm) t = norm.forward(t, cache);
    return act.forward(t, cache);
}

Tensor ConvBlock::backward(const Tensor& dy) {
    Tensor d = act.backward(dy);
    if (use_norm) d = norm.backward(d);
    return conv.backward(d);
}

void ConvBlock::collect(std::vector<ParamBlock*>& out) {
    conv.collect(out);
    if (use_norm) norm.collect(out);
    act.collect(out);
}

// ----------------------------------------------------------------- ResStage

ResStage::ResStage(const std::string& name, int cin, int cout, int kernel)
    : block1(name + ".b1", cin, cout, kernel, true),
      conv2(name + ".conv2", cout, cout, kernel, false, false),
      norm2(name + ".norm2", cout),
      out_act(name + ".act", cout) {
    if (cin != cout) proj.emplace(name + ".proj", cin, cout, 1, false, false);
}

Tensor ResStage::forward(const Tensor& x, bool cache) {
    Tensor t = block1.forward(x, cache);
    t = conv2.forward(t, cache);
    t = norm2.forward(t, cache);
    if (proj) {
        add_inplace(t, proj->forward(x, cache));
    } else {
        add_inplace(t, x);
    }
    return out_act.forward(t, cache);
}

Tensor ResStage::backward(const Tensor& dy) {
    Tensor d = out_act.backward(dy);  // gradient at (main + skip)
    Tensor dmain = norm2.backward(d);
    dmain = conv2.backward(dmain);
    Tensor dx = block1.backward(dmain);
    if (proj) {
        add_inplace(dx, proj->backward(d));
    } else {
        add_inplace(dx, d);
    }
    return dx;
}

void ResStage::collect(std::vector<ParamBlock*>& out) {
    block1.collect(out);
    conv2.collect(out);
    norm2.collect(out);
    if (proj) proj->collect(out);
    out_act.collect(out);
}

// ------------------------------------------------------------------- Branch

Branch::Branch(const std::string& prefix, int depth, int num_classes, int base_channels,
               int kernel, double dropout_rate)
    : depth_(depth), downs_(depth == 3 ? 3 : 4), base_(base_channels) {
    const auto ch = [&](int level) { return base_channels << level; };

    in_block_ = ConvBlock(prefix + ".in", 1, ch(0), kernel, true);
    for (int l = 0; l < downs_; ++l) {
        enc_.emplace_back(prefix + ".enc" + std::to_string(l), ch(l), ch(l), kernel);
        down_.emplace_back(prefix + ".down" + std::to_string(l), ch(l), ch(l + 1), 2,
                           /*down=*/true, /*bias=*/false);
    }
    for (int e = 0; e < depth - downs_; ++e)
        extra_.emplace_back(prefix + ".extra" + std::to_string(e), ch(downs_), ch(downs_),
                            kernel);
    bottleneck_ = ResStage(prefix + ".bottleneck", ch(downs_), ch(downs_), kernel);
    for (int l = 0; l < downs_; ++l) {
        up_.emplace_back(prefix + ".up" + std::to_string(l), ch(l + 1), ch(l),
                         /*bias=*/false);
        dec_.emplace_back(prefix + ".dec" + std::to_string(l), 2 * ch(l), ch(l), kernel);
    }
    head_ = Conv3d(prefix + ".head", ch(0), num_classes, 1, false, true);
    drops_ = {Dropout(dropout_rate), Dropout(dropout_rate), Dropout(dropout_rate)};
}

Branch::Out Branch::forward(const Tensor& x, bool train, std::uint64_t drop_seed) {
    Out out;
    cache_.sizes.assign(std::size_t(downs_) + 1, Dims3{});
    cache_.sizes[0] = x.sdims();
    for (int l = 1; l <= downs_; ++l)
        cache_.sizes[std::size_t(l)] = halve_dims(cache_.sizes[std::size_t(l - 1)]);
    cache_.valid = train;

    const int n_stage = n_stages();
    Tensor t = in_block_.forward(x, train);
    std::vector<Tensor> enc_out(static_cast<std::size_t>(downs_));
    for (int l = 0; l < downs_; ++l) {
        t = enc_[std::size_t(l)].forward(t, train);
        if (l == n_stage - 2) t = drops_[0].forward(t, train, Rng::mix(drop_seed, 0xD0));
        if (l == n_stage - 1) t = drops_[1].forward(t, train, Rng::mix(drop_seed, 0xD1));
        enc_out[std::size_t(l)] = t;
        t = down_[std::size_t(l)].forward(t, train);
    }
    for (std::size_t e = 0; e < extra_.size(); ++e) {
        const int idx = downs_ + int(e);
        t = extra_[e].forward(t, train);
        if (idx == n_stage - 2) t = drops_[0].forward(t, train, Rng::mix(drop_seed, 0xD0));
        if (idx == n_stage - 1) t = drops_[1].forward(t, train, Rng::mix(drop_seed, 0xD1));
    }
    t = bottleneck_.forward(t, train);
    t = drops_[2].forward(t, train, Rng::mix(drop_seed, 0xD2));

    out.pyramid.resize(std::size_t(downs_) + 1);
    for (int l = 1; l < downs_; ++l) out.pyramid[std::size_t(l)] = enc_out[std::size_t(l)];
    out.pyramid[std::size_t(downs_)] = t;

    for (int l = downs_ - 1; l >= 0; --l) {
        t = up_[std::size_t(l)].forward(t, cache_.sizes[std::size_t(l)], train);
        t = concat_channels(t, enc_out[std::size_t(l)]);
        t = dec_[std::size_t(l)].forward(t, train);
    }
    out.logits = head_.forward(t, train);
    return out;
}

Tensor Branch::backward(const Tensor& dlogits, const std::vector<const Tensor*>& d_pyramid) {
    if (!cache_.valid) throw std::logic_error("branch backward without train-mode forward");
    const auto ext = [&](int level) -> const Tensor* {
        return level < int(d_pyramid.size()) ? d_pyramid[std::size_t(level)] : nullptr;
    };
    const int n_stage = n_stages();

    Tensor d = head_.backward(dlogits);
    std::vector<Tensor> skip_grads(static_cast<std::size_t>(downs_));
    for (int l = 0; l < downs_; ++l) {
        d = dec_[std::size_t(l)].backward(d);
        Tensor d_up, d_skip;
        split_channels(d, base_ << l, d_up, d_skip);
        skip_grads[std::size_t(l)] = std::move(d_skip);
        d = up_[std::size_t(l)].backward(d_up);
    }

    if (const Tensor* g = ext(downs_)) add_inplace(d, *g);
    d = drops_[2].backward(d);
    d = bottleneck_.backward(d);
    for (int e = int(extra_.size()) - 1; e >= 0; --e) {
        const int idx = downs_ + e;
        if (idx == n_stage - 1) d = drops_[1].backward(d);
        if (idx == n_stage - 2) d = drops_[0].backward(d);
        d = extra_[std::size_t(e)].backward(d);
    }
    for (int l = downs_ - 1; l >= 0; --l) {
        d = down_[std::size_t(l)].backward(d);
        add_inplace(d, skip_grads[std::size_t(l)]);
        if (l >= 1)
            if (const Tensor* g = ext(l)) add_inplace(d, *g);
        if (l == n_stage - 1) d = drops_[1].backward(d);
        if (l == n_stage - 2) d = drops_[0].backward(d);
        d = enc_[std::size_t(l)].backward(d);
    }
    d = in_block_.backward(d);
    cache_.valid = false;
    return d;
}

void Branch::collect(std::vector<ParamBlock*>& out) {
    in_block_.collect(out);
    for (int l = 0; l < downs_; ++l) {
        enc_[std::size_t(l)].collect(out);
        down_[std::size_t(l)].collect(out);
    }
    for (auto& e : extra_) e.collect(out);
    bottleneck_.collect(out);
    for (int l = 0; l < downs_; ++l) {
        up_[std::size_t(l)].collect(out);
        dec_[std::size_t(l)].collect(out);
    }
    head_.collect(out);
}

int Branch::stage_order_index(int level) const { return level; }

// ----------------------------------------------------------------- CmfModel

CmfModel::FuseConv::FuseConv(const std::string& name, int cin, int cout, int kernel,
                             bool down)
    : conv(name + ".conv", cin, cout, kernel, down, /*bias=*/true), act(name + ".act", cout) {}

Tensor CmfModel::FuseConv::forward(const Tensor& x, bool cache) {
    return act.forward(conv.forward(x, cache), cache);
}

Tensor CmfModel::FuseConv::backward(const Tensor& dy) {
    return conv.backward(act.backward(dy));
}

void CmfModel::FuseConv::collect(std::vector<ParamBlock*>& out) {
    conv.collect(out);
    act.collect(out);
}

CmfModel::CmfModel(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    ct_ = Branch("ct", cfg_.ct_depth, cfg_.num_classes, cfg_.base_channels,
                 cfg_.branch_kernel, cfg_.dropout_rate);
    mr_ = Branch("mr", cfg_.mr_depth, cfg_.num_classes, cfg_.base_channels,
                 cfg_.branch_kernel, cfg_.dropout_rate);

    const bool fused3_needed = cfg_.enable_cff || cfg_.enable_cfe;
    cff_.resize(4);
    for (int l = 1; l <= 3; ++l) {
        const bool build = l == 3 ? fused3_needed : cfg_.enable_cff;
        if (build)
            cff_[std::size_t(l)] = std::make_unique<FuseConv>(
                "mm.cff" + std::to_string(l), 2 * channels(l), channels(l), 3, false);
    }

    if (cfg_.enable_cfe) {
        cfe_ = std::make_unique<Cfe>();
        cfe_->down = FuseConv("mm.cfe.down", channels(3), channels(4), 2, /*down=*/true);
        for (int r = 0; r < 3; ++r)
            cfe_->refine.emplace_back("mm.cfe.ref" + std::to_string(r), channels(4),
                                      channels(4), 3, false);
        mm_start_ = 4;
    } else if (cfg_.enable_cff) {
        mm_start_ = 3;
    } else {
        const int target = cfg_.max_downsamples();
        mfl_ = std::make_unique<MflFuse>();
        for (int l = ct_.downsamples(); l < target; ++l)
            mfl_->ct_align.emplace_back("mm.mfl.ct_align" + std::to_string(l),
                                        channels(ct_.downsamples()),
                                        channels(ct_.downsamples()), 2, true, true);
        for (int l = mr_.downsamples(); l < target; ++l)
            mfl_->mr_align.emplace_back("mm.mfl.mr_align" + std::to_string(l),
                                        channels(mr_.downsamples()),
                                        channels(mr_.downsamples()), 2, true, true);
        mfl_->fuse = FuseConv("mm.mfl.fuse",
                              channels(ct_.downsamples()) + channels(mr_.downsamples()),
                              channels(target), 1, false);
        mm_start_ = target;
    }

    for (int l = 0; l < mm_start_; ++l) {
        mm_up_.emplace_back("mm.up" + std::to_string(l), channels(l + 1), channels(l),
                            /*bias=*/false);
        const int cin = mm_skip_at(l) ? 2 * channels(l) : channels(l);
        mm_dec_.emplace_back("mm.dec" + std::to_string(l), cin, channels(l), 3);
    }
    mm_head_ = Conv3d("mm.head", channels(0), cfg_.num_classes, 1, false, true);
}

bool CmfModel::mm_skip_at(int level) const {
    return cfg_.enable_cff && level >= 1 && level <= 3 && level < mm_start_;
}

ForwardResult CmfModel::forward(const Tensor& ct, const Tensor& mr, bool train,
                                std::uint64_t step_seed, bool keep_pyramids) {
    if (ct.c != 1) throw ShapeError("ct input must have one channel");
    const Tensor& mr_in = cfg_.single_modality ? ct : mr;
    if (!cfg_.single_modality) {
        if (mr.c != 1) throw ShapeError("mr input must have one channel");
        if (!(mr.sdims() == ct.sdims()) || mr.n != ct.n)
            throw ShapeError("ct and mr inputs must share shape");
    }
    const int div = cfg_.divisor();
    const Dims3 sd = ct.sdims();
    if (sd.d % div != 0 || sd.h % div != 0 || sd.w % div != 0)
        throw ShapeError("input dims " + to_string(sd) + " not divisible by " +
                         std::to_string(div) + "; run pad_to_multiple first");

    cache_.sizes.assign(6, Dims3{});
    cache_.sizes[0] = sd;
    for (int l = 1; l <= 5; ++l)
        cache_.sizes[std::size_t(l)] = halve_dims(cache_.sizes[std::size_t(l - 1)]);
    cache_.valid = train;

    auto ct_out = ct_.forward(ct, train, Rng::mix(step_seed, 0xC7));
    auto mr_out = mr_.forward(mr_in, train, Rng::mix(step_seed, 0x317));

    std::vector<Tensor> fused(4);
    for (int l = 1; l <= 3; ++l)
        if (cff_[std::size_t(l)])
            fused[std::size_t(l)] = cff_[std::size_t(l)]->forward(
                concat_channels(ct_out.pyramid[std::size_t(l)],
                                mr_out.pyramid[std::size_t(l)]),
                train);

    Tensor t;
    if (cfe_) {
        t = cfe_->down.forward(fused[3], train);
        for (auto& r : cfe_->refine) t = r.forward(t, train);
    } else if (cfg_.enable_cff) {
        t = fused[3];
    } else {
        Tensor a = ct_out.pyramid[std::size_t(ct_.downsamples())];
        for (auto& al : mfl_->ct_align) a = al.forward(a, train);
        Tensor b = mr_out.pyramid[std::size_t(mr_.downsamples())];
        for (auto& al : mfl_->mr_align) b = al.forward(b, train);
        t = mfl_->fuse.forward(concat_channels(a, b), train);
    }

    for (int l = mm_start_ - 1; l >= 0; --l) {
        t = mm_up_[std::size_t(l)].forward(t, cache_.sizes[std::size_t(l)], train);
        if (mm_skip_at(l)) t = concat_channels(t, fused[std::size_t(l)]);
        t = mm_dec_[std::size_t(l)].forward(t, train);
    }

    ForwardResult out;
    out.logits_ct = std::move(ct_out.logits);
    out.logits_mr = std::move(mr_out.logits);
    out.logits_mm = mm_head_.forward(t, train);

    const auto softmax_of = [&](const Tensor& z) {
        Tensor y(z.n, z.c, z.d, z.h, z.w);
        const MapDims md{z.c, z.d, z.h, z.w};
        for (int ni = 0; ni < z.n; ++ni)
            softmax_channels(z.sample(ni), md, y.sample(ni));
        return y;
    };
    out.probs.y_ct = softmax_of(out.logits_ct);
    out.probs.y_mr = softmax_of(out.logits_mr);
    out.probs.y_mm = softmax_of(out.logits_mm);

    if (keep_pyramids) {
        out.f_ct = std::move(ct_out.pyramid);
        out.f_mr = std::move(mr_out.pyramid);
        out.f_mm = std::move(fused);
    }
    return out;
}

void CmfModel::backward(const Tensor& d_ct_logits, const Tensor& d_mr_logits,
                        const Tensor& d_mm_logits) {
    if (!cache_.valid) throw std::logic_error("model backward without train-mode forward");

    std::vector<Tensor> d_fused(4);
    const auto add_fused = [&](int l, Tensor&& g) {
        if (d_fused[std::size_t(l)].count() == 0)
            d_fused[std::size_t(l)] = std::move(g);
        else
            add_inplace(d_fused[std::size_t(l)], g);
    };

    Tensor d = mm_head_.backward(d_mm_logits);
    for (int l = 0; l < mm_start_; ++l) {
        d = mm_dec_[std::size_t(l)].backward(d);
        if (mm_skip_at(l)) {
            Tensor d_up, d_skip;
            split_channels(d, channels(l), d_up, d_skip);
            add_fused(l, std::move(d_skip));
            d = mm_up_[std::size_t(l)].backward(d_up);
        } else {
            d = mm_up_[std::size_t(l)].backward(d);
        }
    }

    // gradients arriving at the modality pyramids
    std::vector<Tensor> d_fct(5), d_fmr(5);
    if (cfe_) {
        for (int r = 2; r >= 0; --r) d = cfe_->refine[std::size_t(r)].backward(d);
        add_fused(3, cfe_->down.backward(d));
    } else if (cfg_.enable_cff) {
        add_fused(3, std::move(d));
    } else {
        d = mfl_->fuse.backward(d);
        Tensor da, db;
        split_channels(d, channels(ct_.downsamples()), da, db);
        for (int i = int(mfl_->ct_align.size()) - 1; i >= 0; --i)
            da = mfl_->ct_align[std::size_t(i)].backward(da);
        for (int i = int(mfl_->mr_align.size()) - 1; i >= 0; --i)
            db = mfl_->mr_align[std::size_t(i)].backward(db);
        d_fct[std::size_t(ct_.downsamples())] = std::move(da);
        d_fmr[std::size_t(mr_.downsamples())] = std::move(db);
    }

    for (int l = 3; l >= 1; --l) {
        if (!cff_[std::size_t(l)] || d_fused[std::size_t(l)].count() == 0) continue;
        Tensor dcat = cff_[std::size_t(l)]->backward(d_fused[std::size_t(l)]);
        Tensor da, db;
        split_channels(dcat, channels(l), da, db);
        d_fct[std::size_t(l)] = std::move(da);
        d_fmr[std::size_t(l)] = std::move(db);
    }

    const auto ptrs = [](const std::vector<Tensor>& v) {
        std::vector<const Tensor*> p(v.size(), nullptr);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i].count() > 0) p[i] = &v[i];
        return p;
    };
    ct_.backward(d_ct_logits, ptrs(d_fct));
    mr_.backward(d_mr_logits, ptrs(d_fmr));
    cache_.valid = false;
}

std::vector<ParamBlock*> CmfModel::params() {
    std::vector<ParamBlock*> out;
    ct_.collect(out);
    mr_.collect(out);
    for (int l = 1; l <= 3; ++l)
        if (cff_[std::size_t(l)]) cff_[std::size_t(l)]->collect(out);
    if (cfe_) {
        cfe_->down.collect(out);
        for (auto& r : cfe_->refine) r.collect(out);
    }
    if (mfl_) {
        for (auto& a : mfl_->ct_align) a.collect(out);
        for (auto& a : mfl_->mr_align) a.collect(out);
        mfl_->fuse.collect(out);
    }
    for (auto& u : mm_up_) u.collect(out);
    for (auto& s : mm_dec_) s.collect(out);
    mm_head_.collect(out);
    return out;
}

std::vector<ParamBlock*> CmfModel::part_params(const std::string& part) {
    std::vector<ParamBlock*> out;
    if (part == "ct") {
        ct_.collect(out);
    } else if (part == "mr") {
        mr_.collect(out);
    } else if (part == "mm") {
        auto all = params();
        std::vector<ParamBlock*> ct_blocks, mr_blocks;
        ct_.collect(ct_blocks);
        mr_.collect(mr_blocks);
        for (auto* b : all) {
            const bool branch_owned =
                std::find(ct_blocks.begin(), ct_blocks.end(), b) != ct_blocks.end() ||
                std::find(mr_blocks.begin(), mr_blocks.end(), b) != mr_blocks.end();
            if (!branch_owned) out.push_back(b);
        }
    } else {
        throw ConfigError("unknown model part: " + part);
    }
    return out;
}

void CmfModel::init_params(std::uint64_t seed) {
    for (auto* b : params()) b->init_values(seed);
}

void CmfModel::zero_grads() {
    for (auto* b : params()) b->zero_grad();
}

std::size_t CmfModel::count_params() {
    std::size_t total = 0;
    for (auto* b : params()) total += b->count();
    return total;
}

std::size_t CmfModel::count_params(const std::string& part) {
    std::size_t total = 0;
    for (auto* b : part_params(part)) total += b->count();
    return total;
}

std::size_t count_params(CmfModel& model) { return model.count_params(); }

}  // namespace cmf
