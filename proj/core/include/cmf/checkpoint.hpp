#pragma once

#include <string>

#include "cmf/network.hpp"

namespace cmf {

struct CheckpointMeta {
    int epoch = -1;
    double val_dsc = 0.0;
    std::string note;
};

/// Single-archive checkpoint: magic, JSON manifest (NetworkConfig + block
/// table), then all parameter blocks as little-endian float32. Writes go to a
/// temp file followed by an atomic rename, so a failed run never leaves a
/// partially-written checkpoint behind.
void save_checkpoint(CmfModel& model, const std::string& path,
                     const CheckpointMeta& meta = {});

/// Rebuilds the model from the manifest config and loads every block.
/// Malformed archives throw FormatError/CorruptionError.
CmfModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

/// Loads parameters into an existing model; the manifest config must equal
/// the model's config exactly (ConfigError otherwise).
void load_checkpoint_into(CmfModel& model, const std::string& path,
                          CheckpointMeta* meta = nullptr);

NetworkConfig peek_checkpoint_config(const std::string& path);

}  // namespace cmf
