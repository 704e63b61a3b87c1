#include "config_json.hpp"

namespace cmf::detail {

using nlohmann::json;

json network_config_to_json(const NetworkConfig& cfg) {
    json j;
    j["num_classes"] = cfg.num_classes;
    j["ct_depth"] = cfg.ct_depth;
    j["mr_depth"] = cfg.mr_depth;
    j["base_channels"] = cfg.base_channels;
    j["branch_kernel"] = cfg.branch_kernel;
    j["dropout_rate"] = cfg.dropout_rate;
    j["enable_cff"] = cfg.enable_cff;
    j["enable_cfe"] = cfg.enable_cfe;
    j["single_modality"] = cfg.single_modality;
    return j;
}

NetworkConfig network_config_from_json(const json& j) {
    NetworkConfig cfg;
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.ct_depth = j.value("ct_depth", cfg.ct_depth);
    cfg.mr_depth = j.value("mr_depth", cfg.mr_depth);
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
    cfg.branch_kernel = j.value("branch_kernel", cfg.branch_kernel);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    cfg.enable_cff = j.value("enable_cff", cfg.enable_cff);
    cfg.enable_cfe = j.value("enable_cfe", cfg.enable_cfe);
    cfg.single_modality = j.value("single_modality", cfg.single_modality);
    return cfg;
}

json loss_weights_to_json(const LossWeights& w) {
    return json{{"lambda_ct", w.lambda_ct},
                {"lambda_mr", w.lambda_mr},
                {"alpha1", w.alpha1},
                {"alpha2", w.alpha2}};
}

LossWeights loss_weights_from_json(const json& j, LossWeights base) {
    base.lambda_ct = j.value("lambda_ct", base.lambda_ct);
    base.lambda_mr = j.value("lambda_mr", base.lambda_mr);
    base.alpha1 = j.value("alpha1", base.alpha1);
    base.alpha2 = j.value("alpha2", base.alpha2);
    return base;
}

json crf_config_to_json(const CrfConfig& cfg) {
    json kernels = json::array();
    for (const auto& k : cfg.kernels) {
        json kj;
        kj["weight"] = k.weight;
        kj["kind"] = k.kind == CrfKernelKind::kBilateral ? "bilateral" : "spatial";
        kj["sigma_spatial"] = k.sigma_spatial;
        if (k.kind == CrfKernelKind::kBilateral) kj["sigma_intensity"] = k.sigma_intensity;
        kernels.push_back(std::move(kj));
    }
    json j;
    j["kernels"] = std::move(kernels);
    j["exclude_self_pairs"] = cfg.exclude_self_pairs;
    j["normalize_by_pairs"] = cfg.normalize_by_pairs;
    j["max_pixels_per_slice"] = cfg.max_pixels_per_slice;
    return j;
}

CrfConfig crf_config_from_json(const json& j, CrfConfig base) {
    if (j.contains("kernels")) {
        base.kernels.clear();
        for (const auto& kj : j["kernels"]) {
            CrfKernel k;
            k.weight = kj.value("weight", 1.0);
            const std::string kind = kj.value("kind", std::string("bilateral"));
            if (kind == "bilateral")
                k.kind = CrfKernelKind::kBilateral;
            else if (kind == "spatial")
                k.kind = CrfKernelKind::kSpatial;
            else
                throw ConfigError("unknown CRF kernel kind: " + kind);
            k.sigma_spatial = kj.value("sigma_spatial", 5.0);
            k.sigma_intensity = kj.value("sigma_intensity", 0.1);
            base.kernels.push_back(k);
        }
    }
    base.exclude_self_pairs = j.value("exclude_self_pairs", base.exclude_self_pairs);
    base.normalize_by_pairs = j.value("normalize_by_pairs", base.normalize_by_pairs);
    base.max_pixels_per_slice = j.value("max_pixels_per_slice", base.max_pixels_per_slice);
    base.validate();
    return base;
}

}  // namespace cmf::detail
