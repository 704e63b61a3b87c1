#include "cmf/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "config_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cmf {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'F', 'C', 'K', 'P', 'T', '1'};

struct Manifest {
    json j;
    std::uint64_t payload_offset = 0;
};

Manifest read_manifest(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path + ": not a CMFCKPT1 checkpoint");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in || len == 0 || len > (1ull << 30))
        throw FormatError(path + ": bad manifest length");
    std::string text(len, '\0');
    in.read(text.data(), std::streamsize(len));
    if (!in) throw CorruptionError(path + ": truncated manifest");
    Manifest m;
    try {
        m.j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(path + ": malformed manifest: " + e.what());
    }
    m.payload_offset = 16 + len;
    return m;
}

}  // namespace

void save_checkpoint(CmfModel& model, const std::string& path, const CheckpointMeta& meta) {
    const auto blocks = model.params();
    json manifest;
    manifest["format"] = 1;
    manifest["config"] = detail::network_config_to_json(model.config());
    manifest["meta"] = {{"epoch", meta.epoch}, {"val_dsc", meta.val_dsc}, {"note", meta.note}};
    json table = json::array();
    std::uint64_t offset = 0;
    for (const auto* b : blocks) {
        table.push_back({{"name", b->name},
                         {"shape", b->shape},
                         {"offset", offset},
                         {"count", b->count()}});
        offset += b->count() * sizeof(float);
    }
    manifest["blocks"] = std::move(table);

    const std::string text = manifest.dump();
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp.string());
        out.write(kMagic, 8);
        const std::uint64_t len = text.size();
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(text.data(), std::streamsize(text.size()));
        for (const auto* b : blocks)
            out.write(reinterpret_cast<const char*>(b->w.data()),
                      std::streamsize(b->w.size() * sizeof(float)));
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

void load_blocks(CmfModel& model, std::ifstream& in, const Manifest& m,
                 const std::string& path) {
    std::vector<ParamBlock*> blocks = model.params();
    const auto find_block = [&](const std::string& name) -> ParamBlock* {
        for (auto* b : blocks)
            if (b->name == name) return b;
        return nullptr;
    };
    if (!m.j.contains("blocks")) throw FormatError(path + ": manifest has no block table");
    std::size_t loaded = 0;
    for (const auto& entry : m.j["blocks"]) {
        const std::string name = entry.at("name").get<std::string>();
        ParamBlock* b = find_block(name);
        if (!b) throw ConfigError(path + ": unknown parameter block " + name);
        const auto count = entry.at("count").get<std::uint64_t>();
        if (count != b->count())
            throw CorruptionError(path + ": block " + name + " has " + std::to_string(count) +
                                  " values, model expects " + std::to_string(b->count()));
        const auto offset = entry.at("offset").get<std::uint64_t>();
        in.seekg(std::streamoff(m.payload_offset + offset));
        in.read(reinterpret_cast<char*>(b->w.data()),
                std::streamsize(b->w.size() * sizeof(float)));
        if (!in) throw CorruptionError(path + ": truncated payload at block " + name);
        ++loaded;
    }
    if (loaded != blocks.size())
        throw ConfigError(path + ": checkpoint holds " + std::to_string(loaded) +
                          " blocks, model has " + std::to_string(blocks.size()));
}

CheckpointMeta meta_of(const json& j) {
    CheckpointMeta meta;
    if (j.contains("meta")) {
        meta.epoch = j["meta"].value("epoch", -1);
        meta.val_dsc = j["meta"].value("val_dsc", 0.0);
        meta.note = j["meta"].value("note", std::string());
    }
    return meta;
}

}  // namespace

CmfModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing checkpoint: " + path);
    const Manifest m = read_manifest(in, path);
    if (!m.j.contains("config")) throw FormatError(path + ": manifest has no config");
    CmfModel model(detail::network_config_from_json(m.j["config"]));
    load_blocks(model, in, m, path);
    if (meta) *meta = meta_of(m.j);
    return model;
}

void load_checkpoint_into(CmfModel& model, const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing checkpoint: " + path);
    const Manifest m = read_manifest(in, path);
    const NetworkConfig file_cfg = detail::network_config_from_json(m.j.at("config"));
    if (!(file_cfg == model.config()))
        throw ConfigError(path + ": checkpoint config does not match the model config");
    load_blocks(model, in, m, path);
    if (meta) *meta = meta_of(m.j);
}

NetworkConfig peek_checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing checkpoint: " + path);
    const Manifest m = read_manifest(in, path);
    return detail::network_config_from_json(m.j.at("config"));
}

}  // namespace cmf
