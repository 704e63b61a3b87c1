#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmf/volume.hpp"

namespace cmf {

/// Dice similarity coefficient for one class: 2|P∩G| / (|P| + |G|), defined
/// as 1.0 when the class is empty in both masks.
double dsc(const LabelMask& pred, const LabelMask& gt, int class_id);

/// Symmetric average surface distance in mm for one class. Surfaces are
/// 6-connected boundary voxels; distances are Euclidean between voxel centers
/// under the given spacing. Empty in both masks -> 0.0 mm; empty in exactly
/// one -> nullopt (undefined).
std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, int class_id,
                          Vec3 spacing);

/// Per-case evaluation over all foreground classes (1..num_classes-1).
struct CaseMetrics {
    std::string case_id;
    std::vector<int> class_ids;
    std::vector<double> class_dsc;
    std::vector<std::optional<double>> class_asd;
    double mean_dsc = 0.0;
    std::optional<double> mean_asd;  // over the defined class ASDs
    bool asd_undefined_present = false;
};

CaseMetrics evaluate_case(const LabelMask& pred, const LabelMask& gt,
                          const std::string& case_id = "");

/// Summary across cases in the "mean ± std" presentation.
struct MetricSummary {
    double dsc_mean = 0.0, dsc_std = 0.0;
    double asd_mean = 0.0, asd_std = 0.0;
    int asd_cases = 0;  // cases contributing a defined mean ASD
};

MetricSummary summarize(const std::vector<CaseMetrics>& cases);

}  // namespace cmf
