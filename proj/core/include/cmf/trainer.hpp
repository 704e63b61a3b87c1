#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmf/checkpoint.hpp"
#include "cmf/losses.hpp"
#include "cmf/network.hpp"
#include "cmf/rvol.hpp"
#include "cmf/sampling.hpp"

namespace cmf {

struct OptimConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 2;
    int epochs = 20;
    int grad_accum_steps = 1;  // emulate larger batches on small hosts
};

/// Full training configuration. `seed` drives everything; data_seed /
/// init_seed override the derived streams so data order and weight init can
/// be varied independently.
struct TrainConfig {
    std::string index_path;
    std::string checkpoint_dir = "checkpoints";
    NetworkConfig model;
    LossWeights weights;
    CrfConfig crf;
    LossToggles toggles;
    bool imc_detach = false;
    bool pce_sum = false;
    OptimConfig optim;
    Dims3 crop{64, 64, 16};
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> data_seed;
    std::optional<std::uint64_t> init_seed;
    bool deterministic = true;  // all randomness is seed-derived either way
    bool full_supervision = false;  // dense CE on gt instead of scribble pCE

    enum class Selection { kBestValDsc, kLast };
    Selection selection = Selection::kBestValDsc;

    std::uint64_t effective_data_seed() const;
    std::uint64_t effective_init_seed() const;
    void validate() const;

    /// Published settings: lr 1e-5, batch 16, 200 epochs, 96x96x16 crops,
    /// dropout 0.5, lambda (0.2, 0.2), alpha (0.8, 0.8).
    static TrainConfig paper_preset();
    /// Small-host settings used by the synthetic benchmark.
    static TrainConfig desk_preset();

    std::string to_json_string() const;
    static TrainConfig from_json_string(const std::string& text);
    static TrainConfig from_json_file(const std::string& path);
};

struct EpochStats {
    int epoch = 0;
    double total = 0.0, ssl = 0.0, imr = 0.0, imc = 0.0;
    double val_dsc_ct = 0.0, val_dsc_mr = 0.0, val_dsc_mm = 0.0;
    double val_asd_mm = -1.0;  // negative = undefined this epoch
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_dsc = 0.0;
};

struct TrainResult {
    TrainHistory history;
    std::string best_checkpoint;
    std::string last_checkpoint;
};

/// Runs the optimization loop; writes best.ckpt / last.ckpt under
/// cfg.checkpoint_dir. Throws ConfigError when the dataset carries no
/// usable supervision for the selected mode.
TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr);

/// Pads to the model's divisor, runs one forward pass, takes the voxelwise
/// argmax of the cross-modal prediction, and restores the original extent.
LabelMask infer(CmfModel& model, const ModalityPair& pair);

/// Per-branch validation metric used during training (mean foreground DSC
/// plus the y_mm surface distance).
struct ValScores {
    double dsc_ct = 0.0, dsc_mr = 0.0, dsc_mm = 0.0;
    double asd_mm = -1.0;
};
ValScores validate_model(CmfModel& model, const std::vector<ModalityPair>& cases);

void write_history_csv(const TrainHistory& h, const std::string& path);
void write_history_json(const TrainHistory& h, const std::string& path);

}  // namespace cmf
