#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cmf/ablation.hpp"
#include "cmf/metrics.hpp"
#include "cmf/rng.hpp"
#include "cmf/scribble.hpp"
#include "cmf/synth.hpp"
#include "cmf/trainer.hpp"

using namespace cmf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    auto p = fs::temp_directory_path() / (std::string("cmf_trainer_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Writes a small synthetic dataset and returns the index path.
std::string make_dataset(const fs::path& dir, int n_cases, Dims3 dims,
                         std::uint64_t seed = 0) {
    std::vector<CaseRecord> records;
    for (int i = 0; i < n_cases; ++i) {
        auto pair = synth_pair(seed + std::uint64_t(i), dims, 2, 2);
        pair.scribble = gen_scribbles(*pair.gt, ScribbleMode::kManualSim,
                                      seed + 1000 + std::uint64_t(i));
        const std::string case_dir = "case" + std::to_string(i);
        fs::create_directories(dir / case_dir);
        write_volume(pair.ct, (dir / case_dir / "ct").string());
        write_volume(pair.mr, (dir / case_dir / "mr").string());
        write_label_mask(*pair.gt, (dir / case_dir / "gt").string());
        write_scribble_mask(*pair.scribble, (dir / case_dir / "scribble").string());
        records.push_back({case_dir, case_dir + "/ct", case_dir + "/mr", case_dir + "/gt",
                           case_dir + "/scribble"});
    }
    const std::string index = (dir / "index.json").string();
    write_dataset_index(records, index);
    return index;
}

TrainConfig tiny_config(const std::string& index, const fs::path& ckpt_dir) {
    TrainConfig cfg;
    cfg.index_path = index;
    cfg.checkpoint_dir = ckpt_dir.string();
    cfg.model.base_channels = 2;
    cfg.model.branch_kernel = 3;
    cfg.model.dropout_rate = 0.1;
    cfg.crop = {32, 32, 16};
    cfg.optim.batch_size = 2;
    cfg.optim.epochs = 2;
    cfg.optim.lr = 1e-3;
    cfg.crf.max_pixels_per_slice = 64;
    cfg.val_fraction = 0.25;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("paper preset pins the published hyperparameters") {
    const TrainConfig cfg = TrainConfig::paper_preset();
    CHECK(cfg.optim.lr == 1e-5);
    CHECK(cfg.optim.batch_size == 16);
    CHECK(cfg.optim.epochs == 200);
    CHECK(cfg.crop == Dims3{96, 96, 16});
    CHECK(cfg.model.dropout_rate == 0.5);
    CHECK(cfg.weights.lambda_ct == 0.2);
    CHECK(cfg.weights.lambda_mr == 0.2);
    CHECK(cfg.weights.alpha1 == 0.8);
    CHECK(cfg.weights.alpha2 == 0.8);
    CHECK(cfg.model.ct_depth == 3);
    CHECK(cfg.model.mr_depth == 4);

    // round-trips through the JSON config format
    const auto back = TrainConfig::from_json_string(cfg.to_json_string());
    CHECK(back.optim.lr == cfg.optim.lr);
    CHECK(back.optim.batch_size == cfg.optim.batch_size);
    CHECK(back.crop == cfg.crop);
    CHECK(back.weights.alpha1 == cfg.weights.alpha1);
    CHECK(back.model == cfg.model);
}

TEST_CASE("train config json honors the documented loss keys") {
    const std::string text = R"({
      "loss": {
        "lambda_ct": 0.3, "lambda_mr": 0.1, "alpha1": 0.5, "alpha2": 0.6,
        "crf": {"kernels": [{"kind": "spatial", "weight": 2.0, "sigma_spatial": 4.0}],
                 "max_pixels_per_slice": 128},
        "toggles": {"ssl": true, "imr": false, "imc": true},
        "imc_detach": true,
        "pce_sum": true
      }
    })";
    const auto cfg = TrainConfig::from_json_string(text);
    CHECK(cfg.weights.lambda_ct == 0.3);
    CHECK(cfg.weights.lambda_mr == 0.1);
    CHECK(cfg.weights.alpha1 == 0.5);
    CHECK(cfg.weights.alpha2 == 0.6);
    REQUIRE(cfg.crf.kernels.size() == 1);
    CHECK(cfg.crf.kernels[0].kind == CrfKernelKind::kSpatial);
    CHECK(cfg.crf.kernels[0].weight == 2.0);
    CHECK(cfg.crf.max_pixels_per_slice == 128);
    CHECK_FALSE(cfg.toggles.imr);
    CHECK(cfg.imc_detach);
    CHECK(cfg.pce_sum);
}

TEST_CASE("checkpoint round trip is bit exact and config guarded") {
    const auto dir = temp_dir("ckpt");
    NetworkConfig nc;
    nc.base_channels = 2;
    nc.branch_kernel = 3;
    CmfModel model(nc);
    model.init_params(7);

    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(model, path, {3, 0.5, "test"});

    CheckpointMeta meta;
    CmfModel loaded = load_checkpoint(path, &meta);
    CHECK(meta.epoch == 3);
    CHECK(meta.val_dsc == 0.5);
    auto a = model.params();
    auto b = loaded.params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i]->name == b[i]->name);
        CHECK(a[i]->w == b[i]->w);
    }

    // config mismatch must hard-error
    NetworkConfig other = nc;
    other.base_channels = 4;
    CmfModel wrong(other);
    CHECK_THROWS_AS(load_checkpoint_into(wrong, path), ConfigError);

    // malformed file
    {
        std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
        bad << "NOTACKPT";
    }
    CHECK_THROWS_AS(load_checkpoint((dir / "bad.ckpt").string()), FormatError);
}

TEST_CASE("training runs, logs a consistent breakdown, and checkpoints") {
    const auto dir = temp_dir("train");
    const auto index = make_dataset(dir, 4, {32, 32, 16});
    const auto cfg = tiny_config(index, dir / "ckpt");

    const TrainResult res = train(cfg);
    REQUIRE(res.history.epochs.size() == 2);
    for (const auto& e : res.history.epochs)
        CHECK(std::abs(e.ssl + e.imr + e.imc - e.total) < 1e-6);
    CHECK(fs::exists(res.best_checkpoint));
    CHECK(fs::exists(res.last_checkpoint));

    // history files
    write_history_csv(res.history, (dir / "history.csv").string());
    write_history_json(res.history, (dir / "history.json").string());
    std::ifstream csv(dir / "history.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("val_dsc_mm") != std::string::npos);
}

TEST_CASE("identical seeds reproduce the first epoch to 1e-6 and checkpoints bitwise") {
    const auto dir = temp_dir("determinism");
    const auto index = make_dataset(dir, 4, {32, 32, 16});
    auto cfg = tiny_config(index, dir / "a");
    cfg.optim.epochs = 1;
    const TrainResult ra = train(cfg);
    cfg.checkpoint_dir = (dir / "b").string();
    const TrainResult rb = train(cfg);

    CHECK(std::abs(ra.history.epochs[0].total - rb.history.epochs[0].total) < 1e-6);

    std::ifstream fa(ra.last_checkpoint, std::ios::binary);
    std::ifstream fb(rb.last_checkpoint, std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)),
                         std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)),
                         std::istreambuf_iterator<char>());
    CHECK(ba == bb);
}

TEST_CASE("data-order seed does not move the initial weights and vice versa") {
    const auto dir = temp_dir("seeds");
    const auto index = make_dataset(dir, 4, {32, 32, 16});
    auto cfg = tiny_config(index, dir / "x");

    NetworkConfig nc = cfg.model;
    CmfModel a(nc), b(nc);
    cfg.data_seed = 111;
    a.init_params(cfg.effective_init_seed());
    cfg.data_seed = 222;
    b.init_params(cfg.effective_init_seed());
    auto pa = a.params();
    auto pb = b.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->w == pb[i]->w);

    cfg.data_seed.reset();
    cfg.init_seed = 111;
    const auto d1 = cfg.effective_data_seed();
    cfg.init_seed = 222;
    CHECK(cfg.effective_data_seed() == d1);
}

TEST_CASE("training requires usable supervision") {
    const auto dir = temp_dir("nosup");
    // dataset without scribbles
    std::vector<CaseRecord> records;
    for (int i = 0; i < 2; ++i) {
        auto pair = synth_pair(std::uint64_t(i), {32, 32, 16}, 1, 2);
        const std::string case_dir = "case" + std::to_string(i);
        fs::create_directories(dir / case_dir);
        write_volume(pair.ct, (dir / case_dir / "ct").string());
        write_volume(pair.mr, (dir / case_dir / "mr").string());
        write_label_mask(*pair.gt, (dir / case_dir / "gt").string());
        records.push_back({case_dir, case_dir + "/ct", case_dir + "/mr", case_dir + "/gt",
                           ""});
    }
    write_dataset_index(records, (dir / "index.json").string());

    auto cfg = tiny_config((dir / "index.json").string(), dir / "ckpt");
    CHECK_THROWS_AS(train(cfg), ConfigError);

    // the same dataset is fine for full supervision
    cfg.full_supervision = true;
    const auto res = train(cfg);
    CHECK(res.history.epochs.size() == 2);
}

TEST_CASE("dense CE equals pce when the scribble labels every voxel") {
    const MapDims md{2, 3, 4, 4};
    Rng rng(9);
    std::vector<double> z(std::size_t(md.total()));
    for (auto& v : z) v = rng.gaussian();
    std::vector<double> y(z.size());
    softmax_channels(z.data(), md, y.data());

    std::vector<std::uint8_t> dense(std::size_t(md.spatial()));
    for (auto& s : dense) s = std::uint8_t(rng.next_below(2));

    // pce over an all-labeled mask IS the dense cross entropy
    double manual = 0.0;
    for (std::int64_t i = 0; i < md.spatial(); ++i)
        manual += -std::log(
            y[std::size_t(std::int64_t(dense[std::size_t(i)]) * md.spatial() + i)]);
    manual /= double(md.spatial());
    CHECK(pce_loss(y.data(), md, dense.data()) == doctest::Approx(manual).epsilon(1e-12));

    // perfect one-hot predictions give zero dense CE
    std::vector<double> onehot(y.size(), 0.0);
    for (std::int64_t i = 0; i < md.spatial(); ++i)
        onehot[std::size_t(std::int64_t(dense[std::size_t(i)]) * md.spatial() + i)] = 1.0;
    CHECK(pce_loss(onehot.data(), md, dense.data()) == doctest::Approx(0.0));
}

TEST_CASE("infer pads arbitrary shapes and matches manual forward + argmax") {
    auto pair = synth_pair(77, {20, 25, 9}, 1, 2);
    NetworkConfig nc;
    nc.base_channels = 2;
    nc.branch_kernel = 3;
    CmfModel model(nc);
    model.init_params(3);

    const LabelMask pred = infer(model, pair);
    CHECK(pred.dims == pair.dims());

    // manual pipeline on the same padded input
    const auto [ct_p, rec] = pad_to_multiple(pair.ct, nc.divisor());
    const auto [mr_p, rec_unused] = pad_to_multiple(pair.mr, nc.divisor());
    Tensor tc(1, 1, ct_p.dims.d, ct_p.dims.h, ct_p.dims.w), tm = tc;
    std::copy(ct_p.values.begin(), ct_p.values.end(), tc.v.begin());
    std::copy(mr_p.values.begin(), mr_p.values.end(), tm.v.begin());
    const auto out = model.forward(tc, tm);
    LabelMask manual(ct_p.dims, 2, pair.ct.spacing);
    for (std::int64_t i = 0; i < out.probs.y_mm.spatial(); ++i)
        manual.values[std::size_t(i)] =
            out.probs.y_mm.plane(0, 1)[i] > out.probs.y_mm.plane(0, 0)[i] ? 1 : 0;
    const LabelMask manual_cropped = uncrop(manual, rec);
    CHECK(pred.values == manual_cropped.values);
}

TEST_CASE("ablation grids enumerate the published study axes") {
    TrainConfig base;
    base.checkpoint_dir = "unused";

    const auto loss_grid = make_ablation_grid(AblationAxis::kLossToggles, base);
    REQUIRE(loss_grid.size() == 4);
    CHECK(loss_grid[0].label == "SSL");
    CHECK(loss_grid[1].label == "SSL+IMR");
    CHECK(loss_grid[2].label == "SSL+IMC");
    CHECK(loss_grid[3].label == "SSL+IMR+IMC");
    CHECK_FALSE(loss_grid[0].cfg.toggles.imr);
    CHECK(loss_grid[3].cfg.toggles.imr);
    CHECK(loss_grid[3].cfg.toggles.imc);

    const auto depth_grid = make_ablation_grid(AblationAxis::kDepth, base);
    CHECK(depth_grid.size() == 16);
    bool has_34 = false, has_64 = false;
    for (const auto& e : depth_grid) {
        if (e.label == "CT3MR4") has_34 = true;
        if (e.label == "CT6MR4") has_64 = true;
    }
    CHECK(has_34);
    CHECK(has_64);

    const auto module_grid = make_ablation_grid(AblationAxis::kModules, base);
    REQUIRE(module_grid.size() == 3);
    CHECK_FALSE(module_grid[0].cfg.model.enable_cfe);
    CHECK(module_grid[1].cfg.model.enable_cfe);
    CHECK_FALSE(module_grid[1].cfg.model.enable_cff);
    CHECK(module_grid[2].cfg.model.enable_cff);

    const auto lambda_grid = make_ablation_grid(AblationAxis::kLambda, base, {0.0, 0.2});
    REQUIRE(lambda_grid.size() == 2);
    CHECK(lambda_grid[1].cfg.weights.lambda_ct == 0.2);
    CHECK_THROWS_AS(make_ablation_grid(AblationAxis::kLambda, base, {0.7}), ConfigError);
}

TEST_CASE("a tiny ablation runs end to end and writes its table") {
    const auto dir = temp_dir("ablate");
    const auto index = make_dataset(dir, 4, {32, 32, 16});
    auto base = tiny_config(index, dir / "grid");
    base.optim.epochs = 1;

    const auto grid = make_ablation_grid(AblationAxis::kLossToggles, base);
    const auto rows = run_ablation(grid, /*jobs=*/2);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.best_epoch >= 1);

    write_ablation_csv(rows, (dir / "grid.csv").string());
    std::ifstream csv(dir / "grid.csv");
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 5);  // header + 4 rows
}

TEST_CASE("a 20-epoch smoke run on 8 cases decreases the epoch-mean loss") {
    const auto dir = temp_dir("smoke20");
    const auto index = make_dataset(dir, 8, {32, 32, 16}, 100);
    auto cfg = tiny_config(index, dir / "ckpt");
    cfg.optim.epochs = 20;
    cfg.val_fraction = 0.0;  // loss trajectory is the subject here
    cfg.selection = TrainConfig::Selection::kLast;
    const auto res = train(cfg);
    REQUIRE(res.history.epochs.size() == 20);
    CHECK(res.history.epochs.back().total < res.history.epochs.front().total);
}

TEST_CASE("gradient accumulation emulates larger batches") {
    const auto dir = temp_dir("accum");
    const auto index = make_dataset(dir, 4, {32, 32, 16}, 200);
    auto cfg = tiny_config(index, dir / "a");
    cfg.optim.batch_size = 1;
    cfg.optim.grad_accum_steps = 2;
    cfg.optim.epochs = 1;
    const auto res = train(cfg);
    REQUIRE(res.history.epochs.size() == 1);
    CHECK(std::isfinite(res.history.epochs[0].total));
    CHECK(res.history.epochs[0].total > 0.0);
}
