#include "cmf/metrics.hpp"

#include <cmath>

#include "cmf/morphology.hpp"

namespace cmf {

namespace {

std::vector<std::uint8_t> class_mask(const LabelMask& m, int class_id) {
    std::vector<std::uint8_t> out(m.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.values[i] == class_id;
    return out;
}

void require_aligned(const LabelMask& a, const LabelMask& b) {
    if (!(a.dims == b.dims)) throw ShapeError("metric masks have different dims");
}

}  // namespace

double dsc(const LabelMask& pred, const LabelMask& gt, int class_id) {
    require_aligned(pred, gt);
    std::int64_t np = 0, ng = 0, inter = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] == class_id;
        const bool g = gt.values[i] == class_id;
        np += p;
        ng += g;
        inter += p && g;
    }
    if (np + ng == 0) return 1.0;
    return 2.0 * double(inter) / double(np + ng);
}

std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, int class_id,
                          Vec3 spacing) {
    require_aligned(pred, gt);
    const auto pmask = class_mask(pred, class_id);
    const auto gmask = class_mask(gt, class_id);
    std::int64_t np = 0, ng = 0;
    for (auto v : pmask) np += v;
    for (auto v : gmask) ng += v;
    if (np == 0 && ng == 0) return 0.0;
    if (np == 0 || ng == 0) return std::nullopt;

    const auto pb = boundary6(pmask, pred.dims);
    const auto gb = boundary6(gmask, gt.dims);
    const auto dist_to_g = edt_sq(gb, gt.dims, spacing);
    const auto dist_to_p = edt_sq(pb, pred.dims, spacing);

    double sum_pg = 0.0, sum_gp = 0.0;
    std::int64_t nb_p = 0, nb_g = 0;
    for (std::size_t i = 0; i < pb.size(); ++i) {
        if (pb[i]) {
            sum_pg += std::sqrt(dist_to_g[i]);
            ++nb_p;
        }
        if (gb[i]) {
            sum_gp += std::sqrt(dist_to_p[i]);
            ++nb_g;
        }
    }
    return 0.5 * (sum_pg / double(nb_p) + sum_gp / double(nb_g));
}

CaseMetrics evaluate_case(const LabelMask& pred, const LabelMask& gt,
                          const std::string& case_id) {
    require_aligned(pred, gt);
    CaseMetrics out;
    out.case_id = case_id;
    const int nc = gt.num_classes;
    double dsc_acc = 0.0, asd_acc = 0.0;
    int asd_defined = 0;
    for (int c = 1; c < nc; ++c) {
        out.class_ids.push_back(c);
        out.class_dsc.push_back(dsc(pred, gt, c));
        out.class_asd.push_back(asd(pred, gt, c, gt.spacing));
        dsc_acc += out.class_dsc.back();
        if (out.class_asd.back()) {
            asd_acc += *out.class_asd.back();
            ++asd_defined;
        } else {
            out.asd_undefined_present = true;
        }
    }
    const int n_fg = nc - 1;
    out.mean_dsc = n_fg > 0 ? dsc_acc / double(n_fg) : 1.0;
    if (asd_defined > 0) out.mean_asd = asd_acc / double(asd_defined);
    return out;
}

MetricSummary summarize(const std::vector<CaseMetrics>& cases) {
    MetricSummary s;
    if (cases.empty()) return s;
    double d1 = 0.0, d2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    int na = 0;
    for (const auto& c : cases) {
        d1 += c.mean_dsc;
        d2 += c.mean_dsc * c.mean_dsc;
        if (c.mean_asd) {
            a1 += *c.mean_asd;
            a2 += *c.mean_asd * *c.mean_asd;
            ++na;
        }
    }
    const double n = double(cases.size());
    s.dsc_mean = d1 / n;
    s.dsc_std = std::sqrt(std::max(0.0, d2 / n - s.dsc_mean * s.dsc_mean));
    s.asd_cases = na;
    if (na > 0) {
        s.asd_mean = a1 / double(na);
        s.asd_std = std::sqrt(std::max(0.0, a2 / double(na) - s.asd_mean * s.asd_mean));
    }
    return s;
}

}  // namespace cmf
