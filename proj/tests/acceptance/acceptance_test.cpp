// Acceptance suite: one pass/fail line per criterion.
//
// Usage: acceptance_test [criterion ...]
// With no arguments every criterion runs (9, 10 are quick; 1-5 take a few
// minutes; 6-8 train the synthetic benchmark and dominate the runtime).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmf/ablation.hpp"
#include "cmf/losses.hpp"
#include "cmf/metrics.hpp"
#include "cmf/network.hpp"
#include "cmf/rng.hpp"
#include "cmf/rvol.hpp"
#include "cmf/sampling.hpp"
#include "cmf/scribble.hpp"
#include "cmf/synth.hpp"
#include "cmf/trainer.hpp"
#include "oracles/oracles.hpp"

using namespace cmf;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string detail;
    bool pass;
    double seconds;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
        pass = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    g_results.push_back({id, detail, pass, secs});
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " (" << name
              << "): " << detail << "  [" << std::fixed << std::setprecision(1) << secs
              << "s]\n"
              << std::defaultfloat;
}

std::vector<double> random_probs(MapDims dims, Rng& rng) {
    std::vector<double> z(std::size_t(dims.total()));
    for (auto& v : z) v = rng.gaussian();
    std::vector<double> y(z.size());
    softmax_channels(z.data(), dims, y.data());
    return y;
}

// ------------------------------------------------------------ criterion 1

bool criterion_gradients(std::string& detail) {
    Rng rng(101);
    double worst = 0.0;
    const int instances = 20;

    const auto check = [&](auto&& loss_and_grad, MapDims dims) {
        std::vector<double> z(std::size_t(dims.total()));
        for (auto& v : z) v = rng.gaussian();
        std::vector<double> y(z.size());
        softmax_channels(z.data(), dims, y.data());
        std::vector<double> dLdy(z.size(), 0.0), analytic(z.size(), 0.0);
        const auto loss_fn = [&](const double* zz) {
            std::vector<double> yy(z.size());
            softmax_channels(zz, dims, yy.data());
            return loss_and_grad(yy.data(), nullptr);
        };
        loss_and_grad(y.data(), dLdy.data());
        softmax_backward(y.data(), dLdy.data(), dims, analytic.data());
        const auto rep = oracle::finite_diff_grad(loss_fn, z, analytic, 1e-4, 1e-4);
        worst = std::max(worst, rep.max_rel_error);
        return rep.pass();
    };

    bool ok = true;
    for (int i = 0; i < instances; ++i) {
        const MapDims dims{2 + int(rng.next_below(2)), 2 + int(rng.next_below(3)),
                           3 + int(rng.next_below(4)), 3 + int(rng.next_below(4))};
        std::vector<std::uint8_t> scrib(std::size_t(dims.spatial()), 255);
        for (int k = 0; k < 5; ++k)
            scrib[std::size_t(rng.next_below(std::uint64_t(dims.spatial())))] =
                std::uint8_t(rng.next_below(std::uint64_t(dims.c)));
        std::vector<double> img(std::size_t(dims.spatial())), img2(img.size());
        for (auto& v : img) v = rng.next_double();
        for (auto& v : img2) v = rng.next_double();
        CrfConfig cfg;
        LossWeights w;

        ok &= check(
            [&](const double* y, double* dy) { return pce_loss<double>(y, dims, scrib.data(), false, dy); },
            dims);
        const MapDims slice{dims.c, 1, dims.h, dims.w};
        std::vector<double> slice_img(img.begin(), img.begin() + slice.spatial());
        ok &= check(
            [&](const double* y, double* dy) {
                return crf_loss_2d<double>(y, slice.c, slice.h, slice.w, slice_img.data(), cfg, dy);
            },
            slice);
        ok &= check(
            [&](const double* y, double* dy) { return mcrf_loss<double>(y, dims, img.data(), cfg, dy); },
            dims);
        ok &= check(
            [&](const double* y, double* dy) {
                return imr_loss<double>(y, dims, img.data(), img2.data(), w, cfg, dy);
            },
            dims);

        // imc and total act on three maps; perturb y_mm with the others fixed
        const auto y_ct = random_probs(dims, rng);
        const auto y_mr = random_probs(dims, rng);
        ok &= check(
            [&](const double* y, double* dy) {
                return imc_loss<double>(y, y_ct.data(), y_mr.data(), dims, w, false, dy,
                                        nullptr, nullptr);
            },
            dims);
        ok &= check(
            [&](const double* y, double* dy) {
                return total_loss<double>(y_ct.data(), y_mr.data(), y, dims, scrib.data(),
                                          img.data(), img2.data(), w, cfg, LossToggles{},
                                          false, false, nullptr, nullptr, dy)
                    .total;
            },
            dims);
    }
    std::ostringstream os;
    os << instances << " instances per loss, max rel error " << std::scientific
       << std::setprecision(2) << worst << " (< 1e-4 required)";
    detail = os.str();
    return ok;
}

// ------------------------------------------------------------ criterion 2

bool criterion_crf_oracle(std::string& detail) {
    Rng rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 2 + int(rng.next_below(7));
        const int w = 2 + int(rng.next_below(7));
        const int nc = 2 + int(rng.next_below(3));
        const MapDims dims{nc, 1, h, w};
        const auto y = random_probs(dims, rng);
        std::vector<double> img(std::size_t(h) * w);
        for (auto& v : img) v = rng.next_double();
        CrfConfig cfg;
        const double fast = crf_loss_2d(y.data(), nc, h, w, img.data(), cfg);
        const double slow = oracle::crf_bruteforce(y.data(), nc, h, w, img.data(), cfg);
        worst = std::max(worst, std::abs(fast - slow));
    }
    std::ostringstream os;
    os << "100 slices (2-4 classes, up to 8x8), max |fast - brute| " << std::scientific
       << std::setprecision(2) << worst << " (< 1e-6 required)";
    detail = os.str();
    return worst < 1e-6;
}

// ------------------------------------------------------------ criterion 3

bool criterion_view_decomposition(std::string& detail) {
    Rng rng(303);
    int exact = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const MapDims dims{2 + int(rng.next_below(2)), 3 + int(rng.next_below(4)),
                           3 + int(rng.next_below(5)), 3 + int(rng.next_below(5))};
        const auto y = random_probs(dims, rng);
        std::vector<double> img(std::size_t(dims.spatial()));
        for (auto& v : img) v = rng.next_double();
        CrfConfig cfg;
        const double a = crf_view_loss(y.data(), dims, img.data(), CrfView::kAxial, cfg);
        const double s = crf_view_loss(y.data(), dims, img.data(), CrfView::kSagittal, cfg);
        const double c = crf_view_loss(y.data(), dims, img.data(), CrfView::kCoronal, cfg);
        const double m = mcrf_loss(y.data(), dims, img.data(), cfg);
        if (m == (a + s + c) / 3.0) ++exact;
    }
    detail = std::to_string(exact) + "/20 volumes bitwise equal to the view mean";
    return exact == 20;
}

// ------------------------------------------------------------ criterion 4

bool criterion_shapes(std::string& detail) {
    NetworkConfig cfg;  // default CT3/MR4, base 16, kernel 5
    CmfModel model(cfg);
    model.init_params(7);
    Rng rng(404);

    double worst_sum = 0.0;
    bool shapes_ok = true;
    Dims3 stage3{};

    const auto run_case = [&](Dims3 in, bool padded_case) {
        Tensor ct(1, 1, in.d, in.h, in.w), mr = ct;
        for (auto& v : ct.v) v = rng.next_float();
        for (auto& v : mr.v) v = rng.next_float();
        Dims3 eval_dims = in;
        if (padded_case) {
            Volume vc(in), vm(in);
            vc.values = ct.v;
            vm.values = mr.v;
            const auto [pc, rec] = pad_to_multiple(vc, cfg.divisor());
            const auto [pm, rec2] = pad_to_multiple(vm, cfg.divisor());
            ct = Tensor(1, 1, pc.dims.d, pc.dims.h, pc.dims.w);
            mr = ct;
            std::copy(pc.values.begin(), pc.values.end(), ct.v.begin());
            std::copy(pm.values.begin(), pm.values.end(), mr.v.begin());
            eval_dims = pc.dims;
        }
        const auto out = model.forward(ct, mr, false, 0, true);
        for (const Tensor* t : {&out.probs.y_ct, &out.probs.y_mr, &out.probs.y_mm}) {
            if (!(t->sdims() == eval_dims)) shapes_ok = false;
            for (std::int64_t i = 0; i < t->spatial(); i += 31) {
                double sum = 0.0;
                for (int c = 0; c < t->c; ++c) {
                    if (t->plane(0, c)[i] < 0.0f) shapes_ok = false;
                    sum += t->plane(0, c)[i];
                }
                worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            }
        }
        if (in == Dims3{96, 96, 16}) stage3 = out.f_ct[3].sdims();
    };

    run_case({32, 32, 16}, false);
    run_case({96, 96, 16}, false);
    run_case({100, 100, 20}, true);  // pads to 112x112x32

    const bool stage3_ok = stage3 == Dims3{12, 12, 2};
    std::ostringstream os;
    os << "outputs match input dims, worst |sum-1| " << std::scientific
       << std::setprecision(2) << worst_sum << " (< 1e-5), CT stage-3 of 96x96x16 = "
       << to_string(stage3);
    detail = os.str();
    return shapes_ok && worst_sum < 1e-5 && stage3_ok;
}

// ------------------------------------------------------------ criterion 5

bool criterion_metrics(std::string& detail) {
    const Dims3 dims{12, 12, 12};
    // half-overlap cubes
    LabelMask a(dims, 2), c(dims, 2);
    for (int d = 1; d < 3; ++d)
        for (int h = 1; h < 3; ++h)
            for (int w = 1; w < 3; ++w) {
                a.at(d, h, w) = 1;
                c.at(d, h, w + 1) = 1;
            }
    const bool dsc_ok = dsc(a, c, 1) == 0.5;

    LabelMask p(dims, 2), g(dims, 2);
    p.at(2, 4, 4) = 1;
    g.at(3, 4, 4) = 1;
    const auto asd_one = asd(p, g, 1, {3.0, 1.0, 1.0});
    const bool asd_ok = asd_one && *asd_one == 3.0;

    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        LabelMask pm(dims, 2), gm(dims, 2);
        const auto blob = [&](LabelMask& m, std::uint64_t seed) {
            Rng r(seed);
            const double cd = 2.0 + r.next_double() * 8.0;
            const double ch = 2.0 + r.next_double() * 8.0;
            const double cw = 2.0 + r.next_double() * 8.0;
            const double rad = 1.5 + r.next_double() * 2.5;
            for (int d = 0; d < dims.d; ++d)
                for (int h = 0; h < dims.h; ++h)
                    for (int w = 0; w < dims.w; ++w)
                        if ((d - cd) * (d - cd) + (h - ch) * (h - ch) + (w - cw) * (w - cw) <
                            rad * rad)
                            m.at(d, h, w) = 1;
        };
        blob(pm, 9000 + std::uint64_t(trial));
        blob(gm, 7000 + std::uint64_t(trial));
        const Vec3 sp{0.5 + rng.next_double() * 2.5, 0.5 + rng.next_double() * 2.5,
                      0.5 + rng.next_double() * 2.5};
        const auto fast = asd(pm, gm, 1, sp);
        const double slow = oracle::asd_bruteforce(pm, gm, 1, sp);
        if (fast && slow >= 0.0) worst = std::max(worst, std::abs(*fast - slow));
    }
    std::ostringstream os;
    os << "half-overlap DSC = 0.5 " << (dsc_ok ? "ok" : "WRONG") << ", 3 mm ASD "
       << (asd_ok ? "ok" : "WRONG") << ", 50 blob pairs max |fast - brute| "
       << std::scientific << std::setprecision(2) << worst << " (< 1e-6 mm)";
    detail = os.str();
    return dsc_ok && asd_ok && worst < 1e-6;
}

// ------------------------------- synthetic benchmark shared by 6, 7, 8 ----

// Desk-scale benchmark: 60 cases of 64x64x16 (50 train / 10 val via the
// 1/6 validation fraction), manual-sim scribbles, CT3/MR4 at base width 8
// with 3^3 kernels, 48x48x16 crops, batch 2, Adam 1e-3, 10 epochs, three
// seeds. Small enough for a CPU-only run, large enough to reproduce the
// published ablation directions.
constexpr int kBenchCases = 60;
constexpr Dims3 kBenchDims{64, 64, 16};
constexpr double kBenchValFraction = 1.0 / 6.0;
constexpr int kBenchEpochs = 10;
constexpr std::uint64_t kBenchSeeds[3] = {1, 2, 3};

std::string bench_root() {
    return (fs::temp_directory_path() / "cmf_acceptance_bench").string();
}

std::string ensure_bench_dataset() {
    const fs::path root = bench_root();
    const std::string index = (root / "data/index.json").string();
    if (fs::exists(index)) return index;
    fs::create_directories(root / "data");
    std::vector<CaseRecord> records;
    for (int i = 0; i < kBenchCases; ++i) {
        auto pair = synth_pair(Rng::mix(0xBE7C4ull, std::uint64_t(i)), kBenchDims, 2, 2);
        const auto scrib =
            gen_scribbles(*pair.gt, ScribbleMode::kManualSim,
                          Rng::mix(0x5C12Bull, std::uint64_t(i)));
        std::ostringstream name;
        name << "case" << std::setw(3) << std::setfill('0') << i;
        fs::create_directories(root / "data" / name.str());
        const auto base = root / "data" / name.str();
        write_volume(pair.ct, (base / "ct").string());
        write_volume(pair.mr, (base / "mr").string());
        write_label_mask(*pair.gt, (base / "gt").string());
        write_scribble_mask(scrib, (base / "scribble").string());
        records.push_back({name.str(), name.str() + "/ct", name.str() + "/mr",
                           name.str() + "/gt", name.str() + "/scribble"});
    }
    write_dataset_index(records, index);
    return index;
}

TrainConfig bench_config(const std::string& index, std::uint64_t seed,
                         const std::string& run_tag) {
    TrainConfig cfg = TrainConfig::desk_preset();
    cfg.index_path = index;
    cfg.checkpoint_dir = (fs::path(bench_root()) / "runs" / run_tag).string();
    cfg.crop = {48, 48, 16};
    cfg.optim.epochs = kBenchEpochs;
    cfg.val_fraction = kBenchValFraction;
    cfg.seed = seed;
    return cfg;
}

// One benchmark training run, memoized on disk so criteria can share arms
// and interrupted suites resume.
EpochStats best_epoch_stats(const TrainHistory& h) {
    for (const auto& e : h.epochs)
        if (e.epoch == h.best_epoch) return e;
    return h.epochs.empty() ? EpochStats{} : h.epochs.back();
}

EpochStats run_bench_arm(const std::string& index, const std::string& tag,
                         std::uint64_t seed, const LossToggles& toggles,
                         int ct_depth = 3, int mr_depth = 4, bool fullsup = false) {
    const std::string run_tag = tag + "_seed" + std::to_string(seed);
    const fs::path marker = fs::path(bench_root()) / "runs" / (run_tag + ".result.json");
    if (fs::exists(marker)) {
        std::ifstream in(marker);
        EpochStats e{};
        in >> e.val_dsc_ct >> e.val_dsc_mr >> e.val_dsc_mm >> e.val_asd_mm;
        if (in) return e;
    }
    TrainConfig cfg = bench_config(index, seed, run_tag);
    cfg.toggles = toggles;
    cfg.model.ct_depth = ct_depth;
    cfg.model.mr_depth = mr_depth;
    cfg.full_supervision = fullsup;
    const TrainResult res = train(cfg, nullptr);
    const EpochStats best = best_epoch_stats(res.history);
    {
        std::ofstream out(marker, std::ios::trunc);
        out << best.val_dsc_ct << ' ' << best.val_dsc_mr << ' ' << best.val_dsc_mm << ' '
            << best.val_asd_mm << '\n';
    }
    return best;
}

double mean3(double a, double b, double c) { return (a + b + c) / 3.0; }

struct ArmScores {
    double dsc_mm = 0.0;
    double dsc_mr = 0.0;
};

ArmScores bench_arm_mean(const std::string& index, const std::string& tag,
                         const LossToggles& toggles, int ct_depth = 3, int mr_depth = 4,
                         bool fullsup = false) {
    double mm[3], mr[3];
    for (int s = 0; s < 3; ++s) {
        const auto e = run_bench_arm(index, tag, kBenchSeeds[s], toggles, ct_depth, mr_depth,
                                     fullsup);
        mm[s] = e.val_dsc_mm;
        mr[s] = e.val_dsc_mr;
    }
    return {mean3(mm[0], mm[1], mm[2]), mean3(mr[0], mr[1], mr[2])};
}

// ------------------------------------------------------------ criterion 6

bool criterion_loss_trend(std::string& detail) {
    const std::string index = ensure_bench_dataset();
    const ArmScores ssl = bench_arm_mean(index, "ssl", {true, false, false});
    const ArmScores imr = bench_arm_mean(index, "ssl_imr", {true, true, false});
    const ArmScores imc = bench_arm_mean(index, "ssl_imc", {true, false, true});
    const ArmScores full = bench_arm_mean(index, "full", {true, true, true});

    const double gap = (full.dsc_mm - ssl.dsc_mm) * 100.0;
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << "mean val DSC x100: SSL " << ssl.dsc_mm * 100
       << ", SSL+IMR " << imr.dsc_mm * 100 << ", SSL+IMC " << imc.dsc_mm * 100
       << ", SSL+IMR+IMC " << full.dsc_mm * 100 << "; gap " << gap << " (>= 3.0 required)";
    detail = os.str();
    return ssl.dsc_mm < imr.dsc_mm && ssl.dsc_mm < imc.dsc_mm && ssl.dsc_mm < full.dsc_mm &&
           gap >= 3.0;
}

// ------------------------------------------------------------ criterion 7

bool criterion_depth_trend(std::string& detail) {
    const std::string index = ensure_bench_dataset();
    const ArmScores ct3mr4 = bench_arm_mean(index, "full", {true, true, true}, 3, 4);
    const ArmScores ct6mr3 = bench_arm_mean(index, "ct6mr3", {true, true, true}, 6, 3);
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << "y_mr mean val DSC x100: CT3MR4 "
       << ct3mr4.dsc_mr * 100 << " vs CT6MR3 " << ct6mr3.dsc_mr * 100
       << " (CT3MR4 >= CT6MR3 required)";
    detail = os.str();
    return ct3mr4.dsc_mr >= ct6mr3.dsc_mr;
}

// ------------------------------------------------------------ criterion 8

bool criterion_weak_vs_full(std::string& detail) {
    const std::string index = ensure_bench_dataset();
    const ArmScores fullsup =
        bench_arm_mean(index, "fullsup", {true, false, false}, 3, 4, true);
    const ArmScores ssl = bench_arm_mean(index, "ssl", {true, false, false});
    const ArmScores imr = bench_arm_mean(index, "ssl_imr", {true, true, false});
    const ArmScores imc = bench_arm_mean(index, "ssl_imc", {true, false, true});
    const ArmScores full = bench_arm_mean(index, "full", {true, true, true});
    const double best_weak =
        std::max({ssl.dsc_mm, imr.dsc_mm, imc.dsc_mm, full.dsc_mm});
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << "mean val DSC x100: fullsup "
       << fullsup.dsc_mm * 100 << ", best weak " << best_weak * 100
       << " (fullsup >= best weak - 5.0 required)";
    detail = os.str();
    return fullsup.dsc_mm * 100.0 >= best_weak * 100.0 - 5.0;
}

// ------------------------------------------------------------ criterion 9

bool criterion_determinism(std::string& detail) {
    const fs::path root = fs::path(bench_root()) / "determinism";
    fs::remove_all(root);
    fs::create_directories(root / "data");
    std::vector<CaseRecord> records;
    for (int i = 0; i < 4; ++i) {
        auto pair = synth_pair(Rng::mix(0xDE7ull, std::uint64_t(i)), {32, 32, 16}, 2, 2);
        const auto scrib = gen_scribbles(*pair.gt, ScribbleMode::kManualSim,
                                         Rng::mix(0xD5ull, std::uint64_t(i)));
        const std::string name = "case" + std::to_string(i);
        fs::create_directories(root / "data" / name);
        write_volume(pair.ct, (root / "data" / name / "ct").string());
        write_volume(pair.mr, (root / "data" / name / "mr").string());
        write_label_mask(*pair.gt, (root / "data" / name / "gt").string());
        write_scribble_mask(scrib, (root / "data" / name / "scribble").string());
        records.push_back({name, name + "/ct", name + "/mr", name + "/gt",
                           name + "/scribble"});
    }
    write_dataset_index(records, (root / "data/index.json").string());

    TrainConfig cfg;
    cfg.index_path = (root / "data/index.json").string();
    cfg.model.base_channels = 4;
    cfg.model.branch_kernel = 3;
    cfg.crop = {32, 32, 16};
    cfg.optim.epochs = 1;
    cfg.optim.batch_size = 2;
    cfg.crf.max_pixels_per_slice = 64;
    cfg.val_fraction = 0.25;
    cfg.seed = 11;
    cfg.deterministic = true;

    cfg.checkpoint_dir = (root / "a").string();
    const TrainResult ra = train(cfg, nullptr);
    cfg.checkpoint_dir = (root / "b").string();
    const TrainResult rb = train(cfg, nullptr);

    const double dloss =
        std::abs(ra.history.epochs[0].total - rb.history.epochs[0].total);
    const auto bytes = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    const bool bitwise = bytes(ra.last_checkpoint) == bytes(rb.last_checkpoint);
    std::ostringstream os;
    os << "epoch-1 loss delta " << std::scientific << std::setprecision(2) << dloss
       << " (< 1e-6), checkpoints " << (bitwise ? "bit-identical" : "DIFFER");
    detail = os.str();
    return dloss < 1e-6 && bitwise;
}

// ----------------------------------------------------------- criterion 10

bool criterion_param_count(std::string& detail) {
    NetworkConfig cfg;  // default channel plan
    CmfModel model(cfg);
    const double ct = double(model.count_params("ct"));
    const double lo = 0.85 * 7.94e6, hi = 1.15 * 7.94e6;
    std::ostringstream os;
    os << "CT3 branch " << std::fixed << std::setprecision(2) << ct / 1e6
       << "M parameters (must lie in [" << lo / 1e6 << "M, " << hi / 1e6 << "M])";
    detail = os.str();
    return ct >= lo && ct <= hi;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

    std::cout << "CmFNet acceptance suite\n";
    if (wanted(1)) run_criterion(1, "gradient suite", criterion_gradients);
    if (wanted(2)) run_criterion(2, "CRF oracle equivalence", criterion_crf_oracle);
    if (wanted(3)) run_criterion(3, "multi-view decomposition", criterion_view_decomposition);
    if (wanted(4)) run_criterion(4, "shape/normalization suite", criterion_shapes);
    if (wanted(5)) run_criterion(5, "metric analytics", criterion_metrics);
    if (wanted(6)) run_criterion(6, "loss-ablation trend", criterion_loss_trend);
    if (wanted(7)) run_criterion(7, "architecture trend", criterion_depth_trend);
    if (wanted(8)) run_criterion(8, "weak vs full sanity", criterion_weak_vs_full);
    if (wanted(9)) run_criterion(9, "determinism", criterion_determinism);
    if (wanted(10)) run_criterion(10, "parameter-count reference", criterion_param_count);

    int failed = 0;
    for (const auto& r : g_results) failed += r.pass ? 0 : 1;
    std::cout << g_results.size() - std::size_t(failed) << "/" << g_results.size()
              << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
