#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include <json.hpp>

#include "alarm2action/ingest.hpp"
#include "alarm2action/sequencer.hpp"

namespace a2a {

nlohmann::json to_json(const PairedDocument& d);
PairedDocument document_from_json(const nlohmann::json& j);

/// One PairedDocument per line.
void write_dataset_jsonl(const std::filesystem::path& path, const std::vector<PairedDocument>& docs);
std::vector<PairedDocument> read_dataset_jsonl(const std::filesystem::path& path);

/// `{"train": [...], "validation": [...], "test": [...], "holdout": [...]}`
void write_split_json(const std::filesystem::path& path, const SplitIndices& split);
SplitIndices read_split_json(const std::filesystem::path& path);

/// Finds `<prefix>_T<k>.csv` files in `dir`, keyed by turbine number.
std::map<int, std::filesystem::path> find_turbine_files(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace a2a
