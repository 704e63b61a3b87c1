#include "cmf/rvol.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "RVOL I/O assumes a little-endian host");

namespace cmf {

namespace {

std::string strip_extension(const std::string& base) {
    if (base.ends_with(".json")) return base.substr(0, base.size() - 5);
    if (base.ends_with(".raw")) return base.substr(0, base.size() - 4);
    return base;
}

json make_sidecar(Dims3 dims, Vec3 spacing, Vec3 origin, const char* dtype) {
    json j;
    j["dims"] = {dims.d, dims.h, dims.w};
    j["spacing_mm"] = {spacing.d, spacing.h, spacing.w};
    j["origin_mm"] = {origin.d, origin.h, origin.w};
    j["dtype"] = dtype;
    j["byte_order"] = "little";
    return j;
}

void write_sidecar_and_raw(const std::string& base, const json& sidecar, const void* data,
                           std::size_t bytes) {
    {
        std::ofstream js(base + ".json", std::ios::trunc);
        if (!js) throw std::runtime_error("cannot open for writing: " + base + ".json");
        js << sidecar.dump(2) << "\n";
    }
    std::ofstream raw(base + ".raw", std::ios::binary | std::ios::trunc);
    if (!raw) throw std::runtime_error("cannot open for writing: " + base + ".raw");
    raw.write(static_cast<const char*>(data), std::streamsize(bytes));
    if (!raw) throw std::runtime_error("short write to " + base + ".raw");
}

struct Sidecar {
    Dims3 dims;
    Vec3 spacing;
    Vec3 origin;
    std::string dtype;
};

Sidecar read_sidecar(const std::string& base) {
    std::ifstream js(base + ".json");
    if (!js) throw FormatError("missing sidecar: " + base + ".json");
    json j;
    try {
        js >> j;
    } catch (const json::exception& e) {
        throw FormatError("malformed sidecar " + base + ".json: " + e.what());
    }
    Sidecar sc;
    try {
        auto dims = j.at("dims");
        auto sp = j.at("spacing_mm");
        auto og = j.at("origin_mm");
        if (dims.size() != 3 || sp.size() != 3 || og.size() != 3)
            throw FormatError("sidecar dims/spacing_mm/origin_mm must have 3 entries");
        sc.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
        sc.spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
        sc.origin = {og[0].get<double>(), og[1].get<double>(), og[2].get<double>()};
        sc.dtype = j.at("dtype").get<std::string>();
        const auto order = j.at("byte_order").get<std::string>();
        if (order != "little") throw FormatError("unsupported byte_order: " + order);
    } catch (const json::exception& e) {
        throw FormatError("sidecar " + base + ".json missing fields: " + e.what());
    }
    if (sc.dims.d < 1 || sc.dims.h < 1 || sc.dims.w < 1)
        throw FormatError("sidecar declares non-positive dims");
    if (sc.dtype != "float32" && sc.dtype != "uint8")
        throw FormatError("unsupported dtype: " + sc.dtype);
    return sc;
}

std::vector<char> read_raw_exact(const std::string& base, std::size_t expected_bytes) {
    const std::string path = base + ".raw";
    std::ifstream raw(path, std::ios::binary);
    if (!raw) throw FormatError("missing payload: " + path);
    raw.seekg(0, std::ios::end);
    const auto actual = std::size_t(raw.tellg());
    if (actual != expected_bytes)
        throw CorruptionError(path + ": payload is " + std::to_string(actual) +
                              " bytes, header declares " + std::to_string(expected_bytes));
    raw.seekg(0, std::ios::beg);
    std::vector<char> buf(expected_bytes);
    raw.read(buf.data(), std::streamsize(expected_bytes));
    if (!raw) throw CorruptionError(path + ": short read");
    return buf;
}

int infer_num_classes(const std::vector<std::uint8_t>& values, bool ignore_255) {
    int max_label = 0;
    for (std::uint8_t v : values) {
        if (ignore_255 && v == ScribbleMask::kIgnore) continue;
        max_label = std::max(max_label, int(v));
    }
    return std::max(2, max_label + 1);
}

}  // namespace

void write_volume(const Volume& v, const std::string& base_in) {
    v.validate();
    const std::string base = strip_extension(base_in);
    write_sidecar_and_raw(base, make_sidecar(v.dims, v.spacing, v.origin, "float32"),
                          v.values.data(), v.values.size() * sizeof(float));
}

Volume read_volume(const std::string& base_in) {
    const std::string base = strip_extension(base_in);
    const Sidecar sc = read_sidecar(base);
    if (sc.dtype != "float32") throw FormatError(base + ": expected float32 volume");
    const auto buf = read_raw_exact(base, std::size_t(sc.dims.voxels()) * sizeof(float));
    Volume v(sc.dims, sc.spacing, sc.origin);
    std::memcpy(v.values.data(), buf.data(), buf.size());
    v.validate();
    return v;
}

void write_label_mask(const LabelMask& m, const std::string& base_in) {
    m.validate();
    const std::string base = strip_extension(base_in);
    write_sidecar_and_raw(base, make_sidecar(m.dims, m.spacing, m.origin, "uint8"),
                          m.values.data(), m.values.size());
}

LabelMask read_label_mask(const std::string& base_in, int num_classes_hint) {
    const std::string base = strip_extension(base_in);
    const Sidecar sc = read_sidecar(base);
    if (sc.dtype != "uint8") throw FormatError(base + ": expected uint8 mask");
    const auto buf = read_raw_exact(base, std::size_t(sc.dims.voxels()));
    LabelMask m(sc.dims, 2, sc.spacing);
    m.origin = sc.origin;
    std::memcpy(m.values.data(), buf.data(), buf.size());
    m.num_classes = num_classes_hint > 0 ? num_classes_hint
                                         : infer_num_classes(m.values, false);
    m.validate();
    return m;
}

void write_scribble_mask(const ScribbleMask& m, const std::string& base_in) {
    m.validate();
    const std::string base = strip_extension(base_in);
    write_sidecar_and_raw(base, make_sidecar(m.dims, m.spacing, m.origin, "uint8"),
                          m.values.data(), m.values.size());
}

ScribbleMask read_scribble_mask(const std::string& base_in, int num_classes_hint) {
    const std::string base = strip_extension(base_in);
    const Sidecar sc = read_sidecar(base);
    if (sc.dtype != "uint8") throw FormatError(base + ": expected uint8 mask");
    const auto buf = read_raw_exact(base, std::size_t(sc.dims.voxels()));
    ScribbleMask m(sc.dims, 2, sc.spacing);
    m.origin = sc.origin;
    std::memcpy(m.values.data(), buf.data(), buf.size());
    m.num_classes = num_classes_hint > 0 ? num_classes_hint : infer_num_classes(m.values, true);
    m.validate();
    return m;
}

std::vector<CaseRecord> read_dataset_index(const std::string& index_path) {
    std::ifstream in(index_path);
    if (!in) throw FormatError("missing dataset index: " + index_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("malformed dataset index: " + std::string(e.what()));
    }
    if (!j.is_array()) throw FormatError("dataset index must be a JSON list");
    std::vector<CaseRecord> cases;
    cases.reserve(j.size());
    for (const auto& rec : j) {
        CaseRecord c;
        try {
            c.case_id = rec.at("case_id").get<std::string>();
            c.ct = rec.at("ct").get<std::string>();
            c.mr = rec.at("mr").get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError("dataset record missing fields: " + std::string(e.what()));
        }
        if (rec.contains("gt")) c.gt = rec["gt"].get<std::string>();
        if (rec.contains("scribble")) c.scribble = rec["scribble"].get<std::string>();
        cases.push_back(std::move(c));
    }
    return cases;
}

void write_dataset_index(const std::vector<CaseRecord>& cases, const std::string& index_path) {
    json j = json::array();
    for (const auto& c : cases) {
        json rec;
        rec["case_id"] = c.case_id;
        rec["ct"] = c.ct;
        rec["mr"] = c.mr;
        if (!c.gt.empty()) rec["gt"] = c.gt;
        if (!c.scribble.empty()) rec["scribble"] = c.scribble;
        j.push_back(std::move(rec));
    }
    std::ofstream out(index_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset index: " + index_path);
    out << j.dump(2) << "\n";
}

ModalityPair load_case(const CaseRecord& rec, const std::string& root_dir,
                       int num_classes_hint) {
    const fs::path root(root_dir);
    ModalityPair pair;
    pair.case_id = rec.case_id;
    pair.ct = read_volume((root / rec.ct).string());
    pair.mr = read_volume((root / rec.mr).string());
    if (!rec.gt.empty()) pair.gt = read_label_mask((root / rec.gt).string(), num_classes_hint);
    if (!rec.scribble.empty())
        pair.scribble = read_scribble_mask((root / rec.scribble).string(), num_classes_hint);
    pair.validate();
    return pair;
}

}  // namespace cmf
