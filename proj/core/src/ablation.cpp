#include "cmf/ablation.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "cmf/parallel.hpp"

namespace fs = std::filesystem;

namespace cmf {

AblationAxis ablation_axis_from_string(const std::string& name) {
    if (name == "depth") return AblationAxis::kDepth;
    if (name == "modules") return AblationAxis::kModules;
    if (name == "loss-toggles") return AblationAxis::kLossToggles;
    if (name == "lambda") return AblationAxis::kLambda;
    if (name == "alpha") return AblationAxis::kAlpha;
    throw ConfigError("unknown ablation axis: " + name +
                      " (expected depth|modules|loss-toggles|lambda|alpha)");
}

std::vector<AblationEntry> make_ablation_grid(AblationAxis axis, const TrainConfig& base,
                                              const std::vector<double>& values) {
    std::vector<AblationEntry> grid;
    const auto push = [&](std::string label, TrainConfig cfg) {
        cfg.checkpoint_dir = (fs::path(base.checkpoint_dir) / label).string();
        grid.push_back({std::move(label), std::move(cfg)});
    };

    switch (axis) {
        case AblationAxis::kDepth:
            for (int ct = 3; ct <= 6; ++ct)
                for (int mr = 3; mr <= 6; ++mr) {
                    TrainConfig cfg = base;
                    cfg.model.ct_depth = ct;
                    cfg.model.mr_depth = mr;
                    push("CT" + std::to_string(ct) + "MR" + std::to_string(mr), cfg);
                }
            break;
        case AblationAxis::kModules: {
            TrainConfig mfl = base;
            mfl.model.enable_cfe = false;
            mfl.model.enable_cff = false;
            push("MFL", mfl);
            TrainConfig cfe = base;
            cfe.model.enable_cfe = true;
            cfe.model.enable_cff = false;
            push("MFL+CFE", cfe);
            TrainConfig full = base;
            full.model.enable_cfe = true;
            full.model.enable_cff = true;
            push("MFL+CFE+CFF", full);
            break;
        }
        case AblationAxis::kLossToggles: {
            const struct {
                const char* label;
                bool imr, imc;
            } rows[4] = {{"SSL", false, false},
                         {"SSL+IMR", true, false},
                         {"SSL+IMC", false, true},
                         {"SSL+IMR+IMC", true, true}};
            for (const auto& r : rows) {
                TrainConfig cfg = base;
                cfg.toggles = {true, r.imr, r.imc};
                push(r.label, cfg);
            }
            break;
        }
        case AblationAxis::kLambda: {
            std::vector<double> sweep =
                values.empty() ? std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5} : values;
            for (double v : sweep) {
                if (v < 0.0 || v > 0.5)
                    throw ConfigError("lambda sweep values must lie in [0, 0.5]");
                TrainConfig cfg = base;
                cfg.weights.lambda_ct = v;
                cfg.weights.lambda_mr = v;
                push("lambda=" + std::to_string(v).substr(0, 4), cfg);
            }
            break;
        }
        case AblationAxis::kAlpha: {
            std::vector<double> sweep =
                values.empty() ? std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0} : values;
            for (double v : sweep) {
                if (v <= 0.0 || v > 1.0)
                    throw ConfigError("alpha sweep values must lie in (0, 1]");
                TrainConfig cfg = base;
                cfg.weights.alpha1 = v;
                cfg.weights.alpha2 = v;
                push("alpha=" + std::to_string(v).substr(0, 4), cfg);
            }
            break;
        }
    }
    if (grid.empty()) throw ConfigError("ablation grid is empty");
    return grid;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationEntry>& grid, int jobs,
                                      std::ostream* log) {
    if (grid.empty()) throw ConfigError("ablation grid is empty");
    jobs = std::max(1, jobs);

    std::vector<AblationRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    const int saved_threads = compute_threads();
    if (jobs > 1) set_compute_threads(1);

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            const auto& entry = grid[i];
            const TrainResult res = train(entry.cfg, nullptr);

            AblationRow row;
            row.label = entry.label;
            row.ct_depth = entry.cfg.model.ct_depth;
            row.mr_depth = entry.cfg.model.mr_depth;
            row.cff = entry.cfg.model.enable_cff;
            row.cfe = entry.cfg.model.enable_cfe;
            row.ssl = entry.cfg.toggles.ssl;
            row.imr = entry.cfg.toggles.imr;
            row.imc = entry.cfg.toggles.imc;
            row.lambda_ct = entry.cfg.weights.lambda_ct;
            row.lambda_mr = entry.cfg.weights.lambda_mr;
            row.alpha1 = entry.cfg.weights.alpha1;
            row.alpha2 = entry.cfg.weights.alpha2;
            row.best_epoch = res.history.best_epoch;
            for (const auto& e : res.history.epochs) {
                if (e.epoch == res.history.best_epoch) {
                    row.val_dsc_ct = e.val_dsc_ct;
                    row.val_dsc_mr = e.val_dsc_mr;
                    row.val_dsc_mm = e.val_dsc_mm;
                    row.val_asd_mm = e.val_asd_mm;
                }
            }
            rows[i] = row;
            if (log) {
                const std::lock_guard<std::mutex> lock(log_mutex);
                (*log) << entry.label << ": dsc_mm " << row.val_dsc_mm << " (best epoch "
                       << row.best_epoch << ")\n";
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    set_compute_threads(saved_threads);
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write ablation csv: " + path);
    out << "label,ct_depth,mr_depth,cfe,cff,ssl,imr,imc,lambda_ct,lambda_mr,alpha1,alpha2,"
           "val_dsc_ct,val_dsc_mr,val_dsc_mm,val_asd_mm,best_epoch\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.ct_depth << ',' << r.mr_depth << ',' << int(r.cfe) << ','
            << int(r.cff) << ',' << int(r.ssl) << ',' << int(r.imr) << ',' << int(r.imc)
            << ',' << r.lambda_ct << ',' << r.lambda_mr << ',' << r.alpha1 << ',' << r.alpha2
            << ',' << r.val_dsc_ct << ',' << r.val_dsc_mr << ',' << r.val_dsc_mm << ',';
        if (r.val_asd_mm >= 0.0) out << r.val_asd_mm;
        out << ',' << r.best_epoch << '\n';
    }
}

}  // namespace cmf
