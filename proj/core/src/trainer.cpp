#include "cmf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "cmf/metrics.hpp"
#include "cmf/rng.hpp"
#include "config_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cmf {

std::uint64_t TrainConfig::effective_data_seed() const {
    return data_seed ? *data_seed : Rng::mix(seed, 0xDA7Aull);
}

std::uint64_t TrainConfig::effective_init_seed() const {
    return init_seed ? *init_seed : Rng::mix(seed, 0x1417ull);
}

void TrainConfig::validate() const {
    model.validate();
    crf.validate();
    if (optim.lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (optim.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (optim.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (optim.grad_accum_steps < 1) throw ConfigError("grad_accum_steps must be >= 1");
    if (crop.d < 1 || crop.h < 1 || crop.w < 1) throw ConfigError("crop must be >= 1 per axis");
    const int div = model.divisor();
    if (crop.d % div != 0 || crop.h % div != 0 || crop.w % div != 0)
        throw ConfigError("crop " + to_string(crop) + " must be divisible by " +
                          std::to_string(div));
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("val_fraction must be in [0, 1)");
    if (!toggles.ssl && !toggles.imr && !toggles.imc)
        throw ConfigError("at least one loss term must be enabled");
}

TrainConfig TrainConfig::paper_preset() {
    TrainConfig cfg;
    cfg.optim.lr = 1e-5;
    cfg.optim.batch_size = 16;
    cfg.optim.epochs = 200;
    cfg.crop = {96, 96, 16};
    cfg.model.dropout_rate = 0.5;
    cfg.weights = LossWeights{};  // 0.2 / 0.2 / 0.8 / 0.8
    return cfg;
}

TrainConfig TrainConfig::desk_preset() {
    TrainConfig cfg;
    cfg.optim.lr = 1e-3;
    cfg.optim.batch_size = 2;
    cfg.optim.epochs = 20;
    cfg.crop = {64, 64, 16};
    cfg.model.base_channels = 8;
    cfg.model.branch_kernel = 3;
    cfg.crf.max_pixels_per_slice = 256;
    return cfg;
}

namespace {

json optim_to_json(const OptimConfig& o) {
    return json{{"lr", o.lr},
                {"beta1", o.beta1},
                {"beta2", o.beta2},
                {"eps", o.eps},
                {"batch_size", o.batch_size},
                {"epochs", o.epochs},
                {"grad_accum_steps", o.grad_accum_steps}};
}

OptimConfig optim_from_json(const json& j, OptimConfig o) {
    o.lr = j.value("lr", o.lr);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.eps = j.value("eps", o.eps);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.epochs = j.value("epochs", o.epochs);
    o.grad_accum_steps = j.value("grad_accum_steps", o.grad_accum_steps);
    return o;
}

}  // namespace

std::string TrainConfig::to_json_string() const {
    json j;
    j["index"] = index_path;
    j["checkpoint_dir"] = checkpoint_dir;
    j["model"] = detail::network_config_to_json(model);
    json loss = detail::loss_weights_to_json(weights);
    loss["crf"] = detail::crf_config_to_json(crf);
    loss["toggles"] = {{"ssl", toggles.ssl}, {"imr", toggles.imr}, {"imc", toggles.imc}};
    loss["imc_detach"] = imc_detach;
    loss["pce_sum"] = pce_sum;
    j["loss"] = std::move(loss);
    j["optim"] = optim_to_json(optim);
    j["crop"] = {crop.d, crop.h, crop.w};
    j["val_fraction"] = val_fraction;
    j["seed"] = seed;
    if (data_seed) j["data_seed"] = *data_seed;
    if (init_seed) j["init_seed"] = *init_seed;
    j["deterministic"] = deterministic;
    j["full_supervision"] = full_supervision;
    j["selection"] = selection == Selection::kBestValDsc ? "best_val_dsc" : "last";
    return j.dump(2);
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed train config: ") + e.what());
    }
    TrainConfig cfg;
    cfg.index_path = j.value("index", cfg.index_path);
    cfg.checkpoint_dir = j.value("checkpoint_dir", cfg.checkpoint_dir);
    if (j.contains("model")) cfg.model = detail::network_config_from_json(j["model"]);
    if (j.contains("loss")) {
        const auto& loss = j["loss"];
        cfg.weights = detail::loss_weights_from_json(loss, cfg.weights);
        if (loss.contains("crf")) cfg.crf = detail::crf_config_from_json(loss["crf"], cfg.crf);
        if (loss.contains("toggles")) {
            cfg.toggles.ssl = loss["toggles"].value("ssl", cfg.toggles.ssl);
            cfg.toggles.imr = loss["toggles"].value("imr", cfg.toggles.imr);
            cfg.toggles.imc = loss["toggles"].value("imc", cfg.toggles.imc);
        }
        cfg.imc_detach = loss.value("imc_detach", cfg.imc_detach);
        cfg.pce_sum = loss.value("pce_sum", cfg.pce_sum);
    }
    if (j.contains("optim")) cfg.optim = optim_from_json(j["optim"], cfg.optim);
    if (j.contains("crop")) {
        const auto& c = j["crop"];
        if (c.size() != 3) throw ConfigError("crop must have 3 entries");
        cfg.crop = {c[0].get<int>(), c[1].get<int>(), c[2].get<int>()};
    }
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("data_seed")) cfg.data_seed = j["data_seed"].get<std::uint64_t>();
    if (j.contains("init_seed")) cfg.init_seed = j["init_seed"].get<std::uint64_t>();
    cfg.deterministic = j.value("deterministic", cfg.deterministic);
    cfg.full_supervision = j.value("full_supervision", cfg.full_supervision);
    const std::string sel = j.value("selection", std::string("best_val_dsc"));
    if (sel == "best_val_dsc")
        cfg.selection = Selection::kBestValDsc;
    else if (sel == "last")
        cfg.selection = Selection::kLast;
    else
        throw ConfigError("unknown selection rule: " + sel);
    return cfg;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

namespace {

void adam_step(const std::vector<ParamBlock*>& blocks, const OptimConfig& o, int t) {
    const double bc1 = 1.0 - std::pow(o.beta1, t);
    const double bc2 = 1.0 - std::pow(o.beta2, t);
    for (auto* b : blocks) {
        if (b->adam_m.size() != b->w.size()) {
            b->adam_m.assign(b->w.size(), 0.0f);
            b->adam_v.assign(b->w.size(), 0.0f);
        }
        for (std::size_t i = 0; i < b->w.size(); ++i) {
            const double g = b->g[i];
            const double m = o.beta1 * b->adam_m[i] + (1.0 - o.beta1) * g;
            const double v = o.beta2 * b->adam_v[i] + (1.0 - o.beta2) * g * g;
            b->adam_m[i] = float(m);
            b->adam_v[i] = float(v);
            b->w[i] -= float(o.lr * (m / bc1) / (std::sqrt(v / bc2) + o.eps));
        }
    }
}

// Dense gt labels stand in for the scribble in full supervision.
std::vector<std::uint8_t> supervision_labels(const ModalityPair& crop, bool full) {
    if (full) return crop.gt->values;
    return crop.scribble->values;
}

LabelMask argmax_mask(const Tensor& probs, int sample, Vec3 spacing, int num_classes) {
    LabelMask mask({probs.d, probs.h, probs.w}, num_classes, spacing);
    const std::int64_t s = probs.spatial();
    for (std::int64_t i = 0; i < s; ++i) {
        int best = 0;
        float best_p = probs.plane(sample, 0)[i];
        for (int c = 1; c < probs.c; ++c) {
            const float p = probs.plane(sample, c)[i];
            if (p > best_p) {
                best_p = p;
                best = c;
            }
        }
        mask.values[std::size_t(i)] = std::uint8_t(best);
    }
    return mask;
}

Tensor to_tensor(const Volume& v) {
    Tensor t(1, 1, v.dims.d, v.dims.h, v.dims.w);
    std::copy(v.values.begin(), v.values.end(), t.v.begin());
    return t;
}

}  // namespace

LabelMask infer(CmfModel& model, const ModalityPair& pair) {
    pair.validate();
    const int div = model.config().divisor();
    const auto [ct_p, rec] = pad_to_multiple(pair.ct, div);
    const auto [mr_p, rec2] = pad_to_multiple(pair.mr, div);
    const auto out = model.forward(to_tensor(ct_p), to_tensor(mr_p), false);
    LabelMask padded =
        argmax_mask(out.probs.y_mm, 0, pair.ct.spacing, model.config().num_classes);
    return uncrop(padded, rec);
}

ValScores validate_model(CmfModel& model, const std::vector<ModalityPair>& cases) {
    ValScores scores;
    if (cases.empty()) return scores;
    double asd_acc = 0.0;
    int asd_n = 0;
    for (const auto& pair : cases) {
        const int div = model.config().divisor();
        const auto [ct_p, rec] = pad_to_multiple(pair.ct, div);
        const auto [mr_p, rec2] = pad_to_multiple(pair.mr, div);
        const auto out = model.forward(to_tensor(ct_p), to_tensor(mr_p), false);
        const int nc = model.config().num_classes;
        const auto eval_branch = [&](const Tensor& probs) {
            LabelMask m = uncrop(argmax_mask(probs, 0, pair.ct.spacing, nc), rec);
            return evaluate_case(m, *pair.gt, pair.case_id);
        };
        const auto cm_ct = eval_branch(out.probs.y_ct);
        const auto cm_mr = eval_branch(out.probs.y_mr);
        const auto cm_mm = eval_branch(out.probs.y_mm);
        scores.dsc_ct += cm_ct.mean_dsc;
        scores.dsc_mr += cm_mr.mean_dsc;
        scores.dsc_mm += cm_mm.mean_dsc;
        if (cm_mm.mean_asd) {
            asd_acc += *cm_mm.mean_asd;
            ++asd_n;
        }
    }
    const double n = double(cases.size());
    scores.dsc_ct /= n;
    scores.dsc_mr /= n;
    scores.dsc_mm /= n;
    scores.asd_mm = asd_n > 0 ? asd_acc / asd_n : -1.0;
    return scores;
}

TrainResult train(const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    const auto records = read_dataset_index(cfg.index_path);
    if (records.empty()) throw ConfigError("dataset index is empty");
    const std::string root = fs::path(cfg.index_path).parent_path().string();

    std::vector<ModalityPair> cases;
    cases.reserve(records.size());
    for (const auto& rec : records)
        cases.push_back(load_case(rec, root, cfg.model.num_classes));

    // supervision sanity
    if (cfg.full_supervision) {
        for (const auto& c : cases)
            if (!c.gt)
                throw ConfigError("full supervision requires gt for case " + c.case_id);
    } else {
        std::int64_t labeled = 0;
        for (const auto& c : cases)
            if (c.scribble) labeled += c.scribble->labeled_count();
        if (labeled == 0)
            throw ConfigError("no scribbled voxels anywhere in the dataset");
    }

    // seeded validation split
    std::vector<int> order(cases.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(Rng::mix(cfg.effective_data_seed(), 0x5BB17ull));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[std::size_t(split_rng.next_below(i))]);
    const int val_count = int(std::llround(cfg.val_fraction * double(cases.size())));
    std::vector<int> val_idx(order.begin(), order.begin() + val_count);
    std::vector<int> train_idx(order.begin() + val_count, order.end());
    if (train_idx.empty()) throw ConfigError("validation split leaves no training cases");

    std::vector<ModalityPair> val_cases;
    for (int i : val_idx) val_cases.push_back(cases[std::size_t(i)]);
    const bool can_validate = !val_cases.empty() && val_cases.front().gt.has_value();

    CmfModel model(cfg.model);
    model.init_params(cfg.effective_init_seed());

    const auto blocks = model.params();
    const int batch = cfg.optim.batch_size;
    const int steps_per_epoch =
        int((train_idx.size() + std::size_t(batch) - 1) / std::size_t(batch));

    TrainResult result;
    result.best_checkpoint = (fs::path(cfg.checkpoint_dir) / "best.ckpt").string();
    result.last_checkpoint = (fs::path(cfg.checkpoint_dir) / "last.ckpt").string();

    const MapDims md{cfg.model.num_classes, cfg.crop.d, cfg.crop.h, cfg.crop.w};
    int adam_t = 0;
    int accum = 0;

    for (int epoch = 1; epoch <= cfg.optim.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng epoch_rng(Rng::mix(cfg.effective_data_seed(), std::uint64_t(epoch)));
        std::vector<int> sched = train_idx;
        for (std::size_t i = sched.size(); i > 1; --i)
            std::swap(sched[i - 1], sched[std::size_t(epoch_rng.next_below(i))]);

        EpochStats stats;
        stats.epoch = epoch;
        model.zero_grads();
        accum = 0;

        for (int step = 0; step < steps_per_epoch; ++step) {
            Tensor ct(batch, 1, cfg.crop.d, cfg.crop.h, cfg.crop.w);
            Tensor mr = ct;
            std::vector<std::vector<std::uint8_t>> labels(static_cast<std::size_t>(batch));
            std::vector<std::vector<float>> ct_img(static_cast<std::size_t>(batch)),
                mr_img(static_cast<std::size_t>(batch));
            for (int slot = 0; slot < batch; ++slot) {
                const int case_idx =
                    sched[std::size_t((step * batch + slot) % int(sched.size()))];
                const std::uint64_t crop_seed = Rng::mix(
                    cfg.effective_data_seed(),
                    (std::uint64_t(epoch) << 40) ^ (std::uint64_t(step) << 16) ^
                        std::uint64_t(slot));
                const ModalityPair crop =
                    random_crop(cases[std::size_t(case_idx)], cfg.crop, crop_seed);
                std::copy(crop.ct.values.begin(), crop.ct.values.end(),
                          ct.v.begin() + std::int64_t(slot) * ct.spatial());
                std::copy(crop.mr.values.begin(), crop.mr.values.end(),
                          mr.v.begin() + std::int64_t(slot) * mr.spatial());
                labels[std::size_t(slot)] =
                    supervision_labels(crop, cfg.full_supervision);
                ct_img[std::size_t(slot)] = crop.ct.values;
                mr_img[std::size_t(slot)] = crop.mr.values;
            }

            const std::uint64_t step_seed =
                Rng::mix(cfg.seed, (std::uint64_t(epoch) << 24) ^ std::uint64_t(step));
            auto out = model.forward(ct, mr, true, step_seed);

            Tensor dz_ct(batch, md.c, md.d, md.h, md.w), dz_mr = dz_ct, dz_mm = dz_ct;
            const float inv_batch =
                1.0f / float(batch * cfg.optim.grad_accum_steps);
            for (int slot = 0; slot < batch; ++slot) {
                CrfConfig crf = cfg.crf;
                crf.sample_seed = Rng::mix(step_seed, std::uint64_t(slot) + 0xABCDull);
                std::vector<float> d_yct(std::size_t(md.total()), 0.0f);
                std::vector<float> d_ymr(d_yct.size(), 0.0f), d_ymm(d_yct.size(), 0.0f);
                const auto bd = total_loss(
                    out.probs.y_ct.sample(slot), out.probs.y_mr.sample(slot),
                    out.probs.y_mm.sample(slot), md, labels[std::size_t(slot)].data(),
                    ct_img[std::size_t(slot)].data(), mr_img[std::size_t(slot)].data(),
                    cfg.weights, crf, cfg.toggles, cfg.imc_detach, cfg.pce_sum,
                    d_yct.data(), d_ymr.data(), d_ymm.data());
                stats.ssl += bd.ssl / (batch * steps_per_epoch);
                stats.imr += bd.imr / (batch * steps_per_epoch);
                stats.imc += bd.imc / (batch * steps_per_epoch);
                stats.total += bd.total / (batch * steps_per_epoch);
                for (auto& g : d_yct) g *= inv_batch;
                for (auto& g : d_ymr) g *= inv_batch;
                for (auto& g : d_ymm) g *= inv_batch;
                softmax_backward(out.probs.y_ct.sample(slot), d_yct.data(), md,
                                 dz_ct.sample(slot));
                softmax_backward(out.probs.y_mr.sample(slot), d_ymr.data(), md,
                                 dz_mr.sample(slot));
                softmax_backward(out.probs.y_mm.sample(slot), d_ymm.data(), md,
                                 dz_mm.sample(slot));
            }
            model.backward(dz_ct, dz_mr, dz_mm);
            if (++accum >= cfg.optim.grad_accum_steps) {
                adam_step(blocks, cfg.optim, ++adam_t);
                model.zero_grads();
                accum = 0;
            }
        }

        if (can_validate) {
            const ValScores v = validate_model(model, val_cases);
            stats.val_dsc_ct = v.dsc_ct;
            stats.val_dsc_mr = v.dsc_mr;
            stats.val_dsc_mm = v.dsc_mm;
            stats.val_asd_mm = v.asd_mm;
            if (cfg.selection == TrainConfig::Selection::kBestValDsc &&
                (result.history.best_epoch < 0 || v.dsc_mm > result.history.best_val_dsc)) {
                result.history.best_epoch = epoch;
                result.history.best_val_dsc = v.dsc_mm;
                save_checkpoint(model, result.best_checkpoint,
                                {epoch, v.dsc_mm, "best validation DSC"});
            }
        }
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(stats);
        if (log)
            (*log) << "epoch " << epoch << " total " << stats.total << " (ssl " << stats.ssl
                   << " imr " << stats.imr << " imc " << stats.imc << ") val-dsc "
                   << stats.val_dsc_mm << " [" << stats.seconds << "s]\n";
    }

    save_checkpoint(model, result.last_checkpoint,
                    {cfg.optim.epochs,
                     result.history.epochs.empty() ? 0.0
                                                   : result.history.epochs.back().val_dsc_mm,
                     "final epoch"});
    if (result.history.best_epoch < 0) {
        // no validation-based selection happened; best == last
        save_checkpoint(model, result.best_checkpoint,
                        {cfg.optim.epochs, 0.0, "final epoch (no validation)"});
        result.history.best_epoch = cfg.optim.epochs;
        result.history.best_val_dsc =
            result.history.epochs.empty() ? 0.0 : result.history.epochs.back().val_dsc_mm;
    }
    return result;
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write history: " + path);
    out << "epoch,total,ssl,imr,imc,val_dsc_ct,val_dsc_mr,val_dsc_mm,val_asd_mm,seconds\n";
    for (const auto& e : h.epochs) {
        out << e.epoch << ',' << e.total << ',' << e.ssl << ',' << e.imr << ',' << e.imc
            << ',' << e.val_dsc_ct << ',' << e.val_dsc_mr << ',' << e.val_dsc_mm << ',';
        if (e.val_asd_mm >= 0.0) out << e.val_asd_mm;
        out << ',' << e.seconds << '\n';
    }
}

void write_history_json(const TrainHistory& h, const std::string& path) {
    json j;
    j["best_epoch"] = h.best_epoch;
    j["best_val_dsc"] = h.best_val_dsc;
    json rows = json::array();
    for (const auto& e : h.epochs) {
        rows.push_back({{"epoch", e.epoch},
                        {"total", e.total},
                        {"ssl", e.ssl},
                        {"imr", e.imr},
                        {"imc", e.imc},
                        {"val_dsc_ct", e.val_dsc_ct},
                        {"val_dsc_mr", e.val_dsc_mr},
                        {"val_dsc_mm", e.val_dsc_mm},
                        {"val_asd_mm", e.val_asd_mm},
                        {"seconds", e.seconds}});
    }
    j["epochs"] = std::move(rows);
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write history: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace cmf
