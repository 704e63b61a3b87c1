#include "commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "cmf/ablation.hpp"
#include "cmf/metrics.hpp"
#include "cmf/parallel.hpp"
#include "cmf/rng.hpp"
#include "cmf/rvol.hpp"
#include "cmf/scribble.hpp"
#include "cmf/synth.hpp"
#include "cmf/trainer.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace cmf;

namespace cmftool {

namespace {

Dims3 parse_dims(const std::string& text) {
    Dims3 d;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> d.d >> c1 >> d.h >> c2 >> d.w) || (c1 != ',' && c1 != 'x') ||
        (c2 != ',' && c2 != 'x'))
        throw ConfigError("expected dims as d,h,w: got '" + text + "'");
    return d;
}

std::string case_name(int i) {
    std::ostringstream os;
    os << "case" << std::setw(3) << std::setfill('0') << i;
    return os.str();
}

// ------------------------------------------------------------------ csv io

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return int(i);
        throw FormatError("csv has no column '" + name + "'");
    }
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing csv: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty csv: " + path);
    t.header = split_csv_line(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split_csv_line(line));
    return t;
}

// --------------------------------------------------- shared train options

struct TrainCliOpts {
    std::string config_path;
    std::string preset;
    std::string index;
    std::string out_dir = "run";
    int threads = 0;

    // explicit overrides, applied only when the flag was passed
    CLI::App* cmd = nullptr;
    int epochs = 0, batch = 0, grad_accum = 0;
    double lr = 0.0, val_fraction = -1.0, dropout = -1.0;
    std::string crop, toggles;
    std::uint64_t seed = 0, data_seed = 0, init_seed = 0;
    int ct_depth = 0, mr_depth = 0, base_channels = 0, branch_kernel = 0, classes = 0;
    bool no_cff = false, no_cfe = false, single_modality = false;
    double lambda_ct = -1.0, lambda_mr = -1.0, alpha1 = -1.0, alpha2 = -1.0;
    int crf_max_pixels = -1;
    bool pce_sum = false, imc_detach = false, fullsup = false;
};

void add_train_options(CLI::App& cmd, TrainCliOpts& o) {
    o.cmd = &cmd;
    cmd.add_option("--config", o.config_path, "JSON config file (see docs/)");
    cmd.add_option("--preset", o.preset,
                   "hyperparameter preset applied on top of the config: paper|desk")
        ->check(CLI::IsMember({"paper", "desk"}));
    cmd.add_option("--index", o.index, "dataset index JSON");
    cmd.add_option("--out", o.out_dir, "output directory (checkpoints, history)");
    cmd.add_option("--threads", o.threads, "compute threads (0 = auto)");
    cmd.add_option("--epochs", o.epochs, "training epochs");
    cmd.add_option("--batch", o.batch, "batch size");
    cmd.add_option("--grad-accum", o.grad_accum, "gradient accumulation steps");
    cmd.add_option("--lr", o.lr, "Adam learning rate");
    cmd.add_option("--crop", o.crop, "training crop d,h,w");
    cmd.add_option("--val-fraction", o.val_fraction, "validation split fraction");
    cmd.add_option("--seed", o.seed, "master seed (default 0)");
    cmd.add_option("--data-seed", o.data_seed, "override the data-order seed");
    cmd.add_option("--init-seed", o.init_seed, "override the weight-init seed");
    cmd.add_option("--toggles", o.toggles, "enabled loss terms, e.g. ssl,imr,imc");
    cmd.add_option("--ct-depth", o.ct_depth, "CT branch depth (3-6)");
    cmd.add_option("--mr-depth", o.mr_depth, "MR branch depth (3-6)");
    cmd.add_option("--base-channels", o.base_channels, "channel width at full resolution");
    cmd.add_option("--branch-kernel", o.branch_kernel, "modality-branch conv kernel (3|5)");
    cmd.add_option("--classes", o.classes, "number of classes");
    cmd.add_option("--dropout", o.dropout, "dropout rate");
    cmd.add_flag("--no-cff", o.no_cff, "disable cross-modal feature fusion blocks");
    cmd.add_flag("--no-cfe", o.no_cfe, "disable the cross-modal feature enhancement block");
    cmd.add_flag("--single-modality", o.single_modality, "feed CT into both branches");
    cmd.add_option("--lambda-ct", o.lambda_ct, "IMR weight for CT kernels");
    cmd.add_option("--lambda-mr", o.lambda_mr, "IMR weight for MR kernels");
    cmd.add_option("--alpha1", o.alpha1, "IMC weight vs the CT branch");
    cmd.add_option("--alpha2", o.alpha2, "IMC weight vs the MR branch");
    cmd.add_option("--crf-max-pixels", o.crf_max_pixels,
                   "CRF pixel cap per slice (0 = dense)");
    cmd.add_flag("--pce-sum", o.pce_sum, "use the unnormalized pCE sum");
    cmd.add_flag("--imc-detach", o.imc_detach, "treat y_mm as a fixed IMC reference");
    cmd.add_flag("--fullsup", o.fullsup, "dense cross-entropy on gt masks");
}

TrainConfig resolve_train_config(const TrainCliOpts& o) {
    TrainConfig cfg;
    if (!o.config_path.empty()) cfg = TrainConfig::from_json_file(o.config_path);
    if (o.preset == "paper") {
        const TrainConfig p = TrainConfig::paper_preset();
        cfg.optim.lr = p.optim.lr;
        cfg.optim.batch_size = p.optim.batch_size;
        cfg.optim.epochs = p.optim.epochs;
        cfg.crop = p.crop;
        cfg.model.dropout_rate = p.model.dropout_rate;
        cfg.weights = p.weights;
        cfg.model.ct_depth = p.model.ct_depth;
        cfg.model.mr_depth = p.model.mr_depth;
    } else if (o.preset == "desk") {
        const TrainConfig p = TrainConfig::desk_preset();
        cfg.optim = p.optim;
        cfg.crop = p.crop;
        cfg.model.base_channels = p.model.base_channels;
        cfg.model.branch_kernel = p.model.branch_kernel;
        cfg.crf.max_pixels_per_slice = p.crf.max_pixels_per_slice;
    }

    const auto passed = [&](const std::string& flag) { return o.cmd->count(flag) > 0; };
    if (passed("--index")) cfg.index_path = o.index;
    if (passed("--epochs")) cfg.optim.epochs = o.epochs;
    if (passed("--batch")) cfg.optim.batch_size = o.batch;
    if (passed("--grad-accum")) cfg.optim.grad_accum_steps = o.grad_accum;
    if (passed("--lr")) cfg.optim.lr = o.lr;
    if (passed("--crop")) cfg.crop = parse_dims(o.crop);
    if (passed("--val-fraction")) cfg.val_fraction = o.val_fraction;
    if (passed("--seed")) cfg.seed = o.seed;
    if (passed("--data-seed")) cfg.data_seed = o.data_seed;
    if (passed("--init-seed")) cfg.init_seed = o.init_seed;
    if (passed("--toggles")) {
        cfg.toggles = {false, false, false};
        std::istringstream in(o.toggles);
        std::string term;
        while (std::getline(in, term, ',')) {
            if (term == "ssl")
                cfg.toggles.ssl = true;
            else if (term == "imr")
                cfg.toggles.imr = true;
            else if (term == "imc")
                cfg.toggles.imc = true;
            else
                throw ConfigError("unknown loss toggle: " + term);
        }
    }
    if (passed("--ct-depth")) cfg.model.ct_depth = o.ct_depth;
    if (passed("--mr-depth")) cfg.model.mr_depth = o.mr_depth;
    if (passed("--base-channels")) cfg.model.base_channels = o.base_channels;
    if (passed("--branch-kernel")) cfg.model.branch_kernel = o.branch_kernel;
    if (passed("--classes")) cfg.model.num_classes = o.classes;
    if (passed("--dropout")) cfg.model.dropout_rate = o.dropout;
    if (o.no_cff) cfg.model.enable_cff = false;
    if (o.no_cfe) cfg.model.enable_cfe = false;
    if (o.single_modality) cfg.model.single_modality = true;
    if (passed("--lambda-ct")) cfg.weights.lambda_ct = o.lambda_ct;
    if (passed("--lambda-mr")) cfg.weights.lambda_mr = o.lambda_mr;
    if (passed("--alpha1")) cfg.weights.alpha1 = o.alpha1;
    if (passed("--alpha2")) cfg.weights.alpha2 = o.alpha2;
    if (passed("--crf-max-pixels")) cfg.crf.max_pixels_per_slice = o.crf_max_pixels;
    if (o.pce_sum) cfg.pce_sum = true;
    if (o.imc_detach) cfg.imc_detach = true;
    if (o.fullsup) cfg.full_supervision = true;
    cfg.checkpoint_dir = (fs::path(o.out_dir) / "checkpoints").string();
    return cfg;
}

void print_train_header(const TrainConfig& cfg, std::ostream& out) {
    out << "cmfnet train: lr=" << cfg.optim.lr << " batch=" << cfg.optim.batch_size
        << " epochs=" << cfg.optim.epochs << " crop=" << to_string(cfg.crop)
        << " dropout=" << cfg.model.dropout_rate << " lambda=(" << cfg.weights.lambda_ct
        << "," << cfg.weights.lambda_mr << ") alpha=(" << cfg.weights.alpha1 << ","
        << cfg.weights.alpha2 << ") model=CT" << cfg.model.ct_depth << "MR"
        << cfg.model.mr_depth << " base=" << cfg.model.base_channels << " kernel="
        << cfg.model.branch_kernel << (cfg.model.enable_cfe ? " +CFE" : "")
        << (cfg.model.enable_cff ? " +CFF" : "")
        << (cfg.full_supervision ? " FULLSUP" : " scribbles") << " seed=" << cfg.seed
        << "\n";
}

std::string pred_base(const std::string& pred_dir, const std::string& case_id) {
    return (fs::path(pred_dir) / case_id / "pred").string();
}

}  // namespace

// -------------------------------------------------------------------- synth

void register_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "generate a synthetic paired-modality dataset");
    struct Opts {
        int cases = 8;
        std::string dims = "64,64,16";
        int objects = 2;
        int classes = 2;
        std::uint64_t seed = 0;
        std::string out = "dataset";
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--cases", o->cases, "number of cases")->capture_default_str();
    cmd->add_option("--dims", o->dims, "volume dims d,h,w")->capture_default_str();
    cmd->add_option("--objects", o->objects, "foreground objects per case (1-5)")
        ->capture_default_str();
    cmd->add_option("--classes", o->classes, "number of classes incl. background")
        ->capture_default_str();
    cmd->add_option("--seed", o->seed, "generation seed")->capture_default_str();
    cmd->add_option("--out", o->out, "output directory")->capture_default_str();

    cmd->callback([o]() {
        if (o->cases < 1) throw ConfigError("--cases must be >= 1");
        const Dims3 dims = parse_dims(o->dims);
        fs::create_directories(o->out);

        std::vector<CaseRecord> records;
        for (int i = 0; i < o->cases; ++i) {
            const auto pair =
                synth_pair(Rng::mix(o->seed, std::uint64_t(i)), dims, o->objects, o->classes);
            const std::string name = case_name(i);
            fs::create_directories(fs::path(o->out) / name);
            write_volume(pair.ct, (fs::path(o->out) / name / "ct").string());
            write_volume(pair.mr, (fs::path(o->out) / name / "mr").string());
            write_label_mask(*pair.gt, (fs::path(o->out) / name / "gt").string());
            records.push_back({name, name + "/ct", name + "/mr", name + "/gt", ""});
        }
        write_dataset_index(records, (fs::path(o->out) / "index.json").string());
        std::cout << "wrote " << o->cases << " cases (" << to_string(dims) << ", "
                  << o->objects << " objects, " << o->classes << " classes) to " << o->out
                  << "\n";
    });
}

// ----------------------------------------------------------------- scribble

void register_scribble(CLI::App& app) {
    auto* cmd = app.add_subcommand("scribble", "derive scribble annotations from gt masks");
    struct Opts {
        std::string index;
        std::string mode = "manual-sim";
        double coverage_fg = 0.0004;
        double coverage_bg = -1.0;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--index", o->index, "dataset index JSON")->required();
    cmd->add_option("--mode", o->mode, "manual-sim | auto-bg")
        ->check(CLI::IsMember({"manual-sim", "auto-bg"}))
        ->capture_default_str();
    cmd->add_option("--coverage-fg", o->coverage_fg,
                    "foreground coverage per class (fraction of voxels)")
        ->capture_default_str();
    cmd->add_option("--coverage-bg", o->coverage_bg,
                    "background coverage (default 0.0008 manual-sim, 0.0006 auto-bg)");
    cmd->add_option("--seed", o->seed, "generation seed")->capture_default_str();

    cmd->callback([o]() {
        auto records = read_dataset_index(o->index);
        const std::string root = fs::path(o->index).parent_path().string();
        const ScribbleMode mode =
            o->mode == "auto-bg" ? ScribbleMode::kAutoBg : ScribbleMode::kManualSim;

        ScribbleTargets targets;
        targets.foreground = o->coverage_fg;
        if (o->coverage_bg > 0.0) {
            targets.background = o->coverage_bg;
            targets.auto_background = o->coverage_bg;
        }

        std::int64_t violations = 0;
        int skipped = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto& rec = records[i];
            if (rec.gt.empty())
                throw ValidationError("case " + rec.case_id + " has no gt mask");
            const LabelMask gt = read_label_mask((fs::path(root) / rec.gt).string());
            ScribbleReport report;
            const ScribbleMask scrib =
                gen_scribbles(gt, mode, Rng::mix(o->seed, std::uint64_t(i)), targets,
                              &report);
            const std::string rel = rec.case_id + "/scribble";
            write_scribble_mask(scrib, (fs::path(root) / rel).string());
            rec.scribble = rel;
            violations += count_scribble_violations(scrib, gt);
            skipped += int(report.skipped_classes.size());
        }
        write_dataset_index(records, o->index);
        std::cout << "scribbled " << records.size() << " cases (mode " << o->mode
                  << ", fg target " << targets.foreground * 100.0 << "%, bg target "
                  << (mode == ScribbleMode::kAutoBg ? targets.auto_background
                                                    : targets.background) * 100.0
                  << "%); violations: " << violations << ", skipped thin classes: " << skipped
                  << "\n";
    });
}

// -------------------------------------------------------------------- train

void register_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "optimize the hybrid-supervised objective");
    auto o = std::make_shared<TrainCliOpts>();
    add_train_options(*cmd, *o);

    cmd->callback([o]() {
        const TrainConfig cfg = resolve_train_config(*o);
        if (cfg.index_path.empty()) throw ConfigError("no dataset index (--index or config)");
        if (o->threads > 0) set_compute_threads(o->threads);
        print_train_header(cfg, std::cout);

        fs::create_directories(o->out_dir);
        {
            std::ofstream used(fs::path(o->out_dir) / "config_used.json");
            used << cfg.to_json_string() << "\n";
        }
        const TrainResult res = train(cfg, &std::cout);
        write_history_csv(res.history, (fs::path(o->out_dir) / "history.csv").string());
        write_history_json(res.history, (fs::path(o->out_dir) / "history.json").string());
        std::cout << "best epoch " << res.history.best_epoch << " (val DSC "
                  << res.history.best_val_dsc << "); checkpoints: " << res.best_checkpoint
                  << ", " << res.last_checkpoint << "\n";
    });
}

// -------------------------------------------------------------------- infer

void register_infer(CLI::App& app) {
    auto* cmd = app.add_subcommand("infer", "segment cases with a trained checkpoint");
    struct Opts {
        std::string checkpoint;
        std::string index;
        std::string out = "predictions";
        int threads = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")->required();
    cmd->add_option("--index", o->index, "dataset index JSON")->required();
    cmd->add_option("--out", o->out, "output directory")->capture_default_str();
    cmd->add_option("--threads", o->threads, "compute threads (0 = auto)");

    cmd->callback([o]() {
        if (o->threads > 0) set_compute_threads(o->threads);
        CmfModel model = load_checkpoint(o->checkpoint);
        const auto records = read_dataset_index(o->index);
        const std::string root = fs::path(o->index).parent_path().string();
        for (const auto& rec : records) {
            const ModalityPair pair = load_case(rec, root, model.config().num_classes);
            const LabelMask pred = infer(model, pair);
            fs::create_directories(fs::path(o->out) / rec.case_id);
            write_label_mask(pred, pred_base(o->out, rec.case_id));
            std::cout << rec.case_id << ": " << to_string(pred.dims) << " labels written\n";
        }
        std::cout << "inferred " << records.size() << " cases to " << o->out << "\n";
    });
}

// --------------------------------------------------------------------- eval

void register_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "score predictions against ground truth");
    struct Opts {
        std::string index;
        std::string pred = "predictions";
        std::string out = "metrics.csv";
        int classes = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--index", o->index, "dataset index JSON (gt required)")->required();
    cmd->add_option("--pred", o->pred, "prediction directory from `infer`")
        ->capture_default_str();
    cmd->add_option("--out", o->out, "metrics csv path")->capture_default_str();
    cmd->add_option("--classes", o->classes, "number of classes (default: inferred)");

    cmd->callback([o]() {
        const auto records = read_dataset_index(o->index);
        const std::string root = fs::path(o->index).parent_path().string();
        std::vector<CaseMetrics> all;
        std::ofstream csv(o->out, std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot write " + o->out);
        csv << "case_id,class,dsc,asd_mm\n";
        for (const auto& rec : records) {
            if (rec.gt.empty()) throw ValidationError("case " + rec.case_id + " has no gt");
            const LabelMask gt =
                read_label_mask((fs::path(root) / rec.gt).string(), o->classes);
            const LabelMask pred =
                read_label_mask(pred_base(o->pred, rec.case_id), gt.num_classes);
            const CaseMetrics cm = evaluate_case(pred, gt, rec.case_id);
            for (std::size_t c = 0; c < cm.class_ids.size(); ++c) {
                csv << rec.case_id << ',' << cm.class_ids[c] << ',' << cm.class_dsc[c] << ',';
                if (cm.class_asd[c]) csv << *cm.class_asd[c];
                csv << '\n';
            }
            all.push_back(cm);
        }
        const MetricSummary s = summarize(all);
        csv << "summary,mean," << s.dsc_mean << ',' << s.asd_mean << '\n';
        csv << "summary,std," << s.dsc_std << ',' << s.asd_std << '\n';
        std::cout << std::fixed << std::setprecision(3) << "DSC " << s.dsc_mean << " ± "
                  << s.dsc_std << std::setprecision(2) << ", ASD " << s.asd_mean << " ± "
                  << s.asd_std << " mm over " << all.size() << " cases\n";
    });
}

// ------------------------------------------------------------------- ablate

void register_ablate(CLI::App& app) {
    auto* cmd = app.add_subcommand("ablate", "run one published study axis as a grid");
    auto o = std::make_shared<TrainCliOpts>();
    add_train_options(*cmd, *o);
    struct Extra {
        std::string axis;
        std::vector<double> values;
        std::string entries;
        std::string out_csv;
        int jobs = 1;
    };
    auto e = std::make_shared<Extra>();
    cmd->add_option("--axis", e->axis, "depth | modules | loss-toggles | lambda | alpha")
        ->required();
    cmd->add_option("--values", e->values, "sweep values for lambda/alpha axes");
    cmd->add_option("--entries", e->entries, "comma list of labels to keep (default all)");
    cmd->add_option("--grid-csv", e->out_csv, "grid csv path (default <out>/grid.csv)");
    cmd->add_option("--jobs", e->jobs, "parallel training workers")->capture_default_str();

    cmd->callback([o, e]() {
        TrainConfig base = resolve_train_config(*o);
        if (base.index_path.empty()) throw ConfigError("no dataset index (--index or config)");
        if (o->threads > 0) set_compute_threads(o->threads);
        base.checkpoint_dir = (fs::path(o->out_dir) / "grid").string();

        auto grid = make_ablation_grid(ablation_axis_from_string(e->axis), base, e->values);
        if (!e->entries.empty()) {
            std::vector<std::string> keep;
            std::istringstream in(e->entries);
            std::string label;
            while (std::getline(in, label, ',')) keep.push_back(label);
            std::vector<AblationEntry> filtered;
            for (auto& entry : grid)
                for (const auto& k : keep)
                    if (entry.label == k) filtered.push_back(entry);
            if (filtered.empty()) throw ConfigError("--entries matched nothing");
            grid = std::move(filtered);
        }

        std::cout << "ablation axis " << e->axis << ": " << grid.size() << " entries, jobs="
                  << e->jobs << "\n";
        const auto rows = run_ablation(grid, e->jobs, &std::cout);
        const std::string csv_path = e->out_csv.empty()
                                         ? (fs::path(o->out_dir) / "grid.csv").string()
                                         : e->out_csv;
        fs::create_directories(o->out_dir);
        write_ablation_csv(rows, csv_path);
        std::cout << "grid written to " << csv_path << "\n";
    });
}

// --------------------------------------------------------------------- plot

void register_plot(CLI::App& app) {
    auto* cmd = app.add_subcommand("plot", "render training or sensitivity curves as SVG");
    struct Opts {
        std::string history;
        std::string ablation;
        std::string x = "lambda_ct";
        std::string out = "plots";
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--history", o->history, "history.csv from `train`");
    cmd->add_option("--ablation", o->ablation, "grid.csv from `ablate`");
    cmd->add_option("--x", o->x, "grid column for the sensitivity x-axis")
        ->capture_default_str();
    cmd->add_option("--out", o->out, "output directory")->capture_default_str();

    cmd->callback([o]() {
        if (o->history.empty() && o->ablation.empty())
            throw ConfigError("plot needs --history and/or --ablation");
        fs::create_directories(o->out);

        if (!o->history.empty()) {
            const CsvTable t = read_csv(o->history);
            const auto col = [&](const std::string& name) {
                std::vector<double> v;
                const int c = t.column(name);
                for (const auto& row : t.rows)
                    v.push_back(row[std::size_t(c)].empty()
                                    ? 0.0
                                    : std::stod(row[std::size_t(c)]));
                return v;
            };
            const auto epochs = col("epoch");
            write_line_chart_svg((fs::path(o->out) / "training_loss.svg").string(),
                                 "training loss", "epoch", "loss",
                                 {{"total", epochs, col("total")},
                                  {"ssl", epochs, col("ssl")},
                                  {"imr", epochs, col("imr")},
                                  {"imc", epochs, col("imc")}});
            write_line_chart_svg((fs::path(o->out) / "validation_dsc.svg").string(),
                                 "validation DSC", "epoch", "mean DSC",
                                 {{"y_mm", epochs, col("val_dsc_mm")},
                                  {"y_ct", epochs, col("val_dsc_ct")},
                                  {"y_mr", epochs, col("val_dsc_mr")}});
            std::cout << "wrote training_loss.svg, validation_dsc.svg\n";
        }
        if (!o->ablation.empty()) {
            const CsvTable t = read_csv(o->ablation);
            const int xc = t.column(o->x);
            const auto col = [&](const std::string& name) {
                std::vector<double> v;
                const int c = t.column(name);
                for (const auto& row : t.rows)
                    v.push_back(row[std::size_t(c)].empty()
                                    ? 0.0
                                    : std::stod(row[std::size_t(c)]));
                return v;
            };
            std::vector<double> xs;
            for (const auto& row : t.rows) xs.push_back(std::stod(row[std::size_t(xc)]));
            write_line_chart_svg((fs::path(o->out) / ("sensitivity_dsc.svg")).string(),
                                 "sensitivity: DSC vs " + o->x, o->x, "mean DSC",
                                 {{"y_mm", xs, col("val_dsc_mm")},
                                  {"y_ct", xs, col("val_dsc_ct")},
                                  {"y_mr", xs, col("val_dsc_mr")}});
            write_line_chart_svg((fs::path(o->out) / ("sensitivity_asd.svg")).string(),
                                 "sensitivity: ASD vs " + o->x, o->x, "ASD (mm)",
                                 {{"y_mm", xs, col("val_asd_mm")}});
            std::cout << "wrote sensitivity_dsc.svg, sensitivity_asd.svg\n";
        }
    });
}

}  // namespace cmftool
