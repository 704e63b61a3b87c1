#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cmf/trainer.hpp"

namespace cmf {

enum class AblationAxis {
    kDepth,       // ct_depth x mr_depth over {3..6}^2
    kModules,     // MFL, MFL+CFE, MFL+CFE+CFF
    kLossToggles, // SSL, SSL+IMR, SSL+IMC, SSL+IMR+IMC
    kLambda,      // lambda_ct = lambda_mr swept over [0, 0.5]
    kAlpha,       // alpha1 = alpha2 swept over (0, 1]
};

AblationAxis ablation_axis_from_string(const std::string& name);

struct AblationEntry {
    std::string label;
    TrainConfig cfg;
};

/// Builds the grid for one study axis from a base configuration. `values`
/// overrides the default sweep for the lambda/alpha axes.
std::vector<AblationEntry> make_ablation_grid(AblationAxis axis, const TrainConfig& base,
                                              const std::vector<double>& values = {});

struct AblationRow {
    std::string label;
    int ct_depth = 0, mr_depth = 0;
    bool cff = false, cfe = false;
    bool ssl = false, imr = false, imc = false;
    double lambda_ct = 0.0, lambda_mr = 0.0, alpha1 = 0.0, alpha2 = 0.0;
    double val_dsc_ct = 0.0, val_dsc_mr = 0.0, val_dsc_mm = 0.0;
    double val_asd_mm = -1.0;
    int best_epoch = -1;
};

/// Trains every entry (optionally with several parallel workers, each
/// single-threaded) and reports the best-checkpoint validation scores.
/// Entries are deterministic and independent; each gets an isolated
/// checkpoint directory under its label.
std::vector<AblationRow> run_ablation(const std::vector<AblationEntry>& grid, int jobs = 1,
                                      std::ostream* log = nullptr);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace cmf
