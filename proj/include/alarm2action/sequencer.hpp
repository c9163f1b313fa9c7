#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alarm2action/ingest.hpp"

namespace a2a {

/// One training example: a repair response and the alarms that preceded it.
struct PairedDocument {
    int turbine_id = 0;
    Timestamp response_time{};
    std::string label;
    /// Alarm texts, oldest first. One entry per surviving alarm event.
    std::vector<std::string> alarm_tokens;

    friend bool operator==(const PairedDocument&, const PairedDocument&) = default;
};

struct SequencerConfig {
    long mem_days = 20;
    std::size_t target_len = 75;
    std::string pad_token = "<pad>";
    double holdout_val = 0.3;
    double holdout_test_of_val = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PairingResult {
    std::vector<PairedDocument> documents;
    /// Responses with no alarm inside their window.
    std::size_t skipped_responses = 0;
};

/// Pairs each response with every alarm in the closed window
/// [response_time - mem_days, response_time]. Both inputs must be sorted
/// ascending and belong to one turbine. Alarms may appear in many documents.
PairingResult build_pairs(const std::vector<AlarmEvent>& alarms, const std::vector<ResponseEvent>& responses,
                          const SequencerConfig& cfg = {});

/// Keeps the most recent `target_len` alarms, left-padding shorter documents.
PairedDocument pad_or_truncate(PairedDocument doc, const SequencerConfig& cfg = {});

struct DatasetSplit {
    std::vector<PairedDocument> train, validation, test;
};

/// Index form of a split: positions into the document list it was made from.
struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
    /// Documents from a held-back turbine, excluded from all three partitions.
    std::vector<std::size_t> holdout;
};

/// Partition sizes for `n` documents: holdout = round(n * holdout_val),
/// validation = floor(holdout * holdout_test_of_val), test = the remainder.
struct SplitSizes {
    std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t n, const SequencerConfig& cfg);

/// Seeded shuffle, then train / validation / test by `split_sizes`.
/// Documents of `holdout_turbine`, when given, go to `holdout` instead.
SplitIndices split_indices(const std::vector<PairedDocument>& docs, const SequencerConfig& cfg,
                           std::optional<int> holdout_turbine = std::nullopt);

DatasetSplit split_dataset(const std::vector<PairedDocument>& docs, const SequencerConfig& cfg = {});

DatasetSplit materialize(const std::vector<PairedDocument>& docs, const SplitIndices& idx);

}  // namespace a2a
