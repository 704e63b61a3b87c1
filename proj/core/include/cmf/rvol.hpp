#pragma once

#include <string>
#include <vector>

#include "cmf/volume.hpp"

namespace cmf {

/// RVOL container: `<base>.json` sidecar plus `<base>.raw` payload in
/// little-endian w-fastest order. Volumes are float32, masks uint8 with
/// 255 = unlabeled for scribbles. `base` may be given with or without the
/// .json/.raw extension.
///
/// Writers produce exactly the documented sidecar fields; readers throw
/// FormatError on malformed sidecars and CorruptionError when the payload
/// byte count disagrees with the declared dims.
void write_volume(const Volume& v, const std::string& base);
Volume read_volume(const std::string& base);

void write_label_mask(const LabelMask& m, const std::string& base);
/// num_classes_hint <= 0 infers num_classes as max(label) + 1 (at least 2).
LabelMask read_label_mask(const std::string& base, int num_classes_hint = 0);

void write_scribble_mask(const ScribbleMask& m, const std::string& base);
ScribbleMask read_scribble_mask(const std::string& base, int num_classes_hint = 0);

/// One dataset index record; paths are RVOL base paths relative to the
/// index file's directory.
struct CaseRecord {
    std::string case_id;
    std::string ct;
    std::string mr;
    std::string gt;        // empty if absent
    std::string scribble;  // empty if absent
};

std::vector<CaseRecord> read_dataset_index(const std::string& index_path);
void write_dataset_index(const std::vector<CaseRecord>& cases, const std::string& index_path);

/// Loads all members named by a record. `num_classes_hint` applies to gt and
/// scribble masks.
ModalityPair load_case(const CaseRecord& rec, const std::string& root_dir,
                       int num_classes_hint = 0);

}  // namespace cmf
