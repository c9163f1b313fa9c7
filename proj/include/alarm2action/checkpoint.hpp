#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "alarm2action/rnn.hpp"

namespace a2a {

/// Everything needed to resume or serve a trained model.
struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    std::optional<AdamState> adam;
    std::uint64_t vocab_hash = 0;
    /// Free-form provenance (seed, epochs, which selection rule, ...).
    nlohmann::json meta = nlohmann::json::object();
};

/// Binary container: 8-byte magic `A2ACKPT1`, u64 header length, JSON header
/// (config, tensor names and shapes, Adam scalars, vocabulary hash, meta),
/// little-endian float64 tensor payload in for_each_tensor order (params,
/// then Adam m and v when present), and a trailing u64 FNV-1a checksum of
/// everything before it.
void save_model(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws CorruptCheckpoint on any structural or checksum failure.
Checkpoint load_model(const std::filesystem::path& path);

/// As load_model, and throws VocabularyHashMismatch unless the checkpoint
/// was trained against `expected_vocab_hash`.
Checkpoint load_model(const std::filesystem::path& path, std::uint64_t expected_vocab_hash);

}  // namespace a2a
