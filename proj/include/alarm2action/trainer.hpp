#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alarm2action/errors.hpp"
#include "alarm2action/rnn.hpp"
#include "alarm2action/sequencer.hpp"
#include "alarm2action/vocab.hpp"

namespace a2a {

struct TrainConfig {
    int epochs = 50;
    double lr = 0.01;
    double clip_threshold = 1.0;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    /// Report progress every N batches through the callback (0 = per epoch only).
    std::size_t progress_every = 0;
    /// Worker threads for per-example forward/backward inside a batch.
    /// Results are bit-identical for any value.
    std::size_t threads = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    /// Running accuracy over the epoch's batches (pre-update predictions).
    double train_acc = 0;
    /// NaN when there is no validation partition.
    double val_acc = 0;
};

struct TrainProgress {
    int epoch = 0;
    std::size_t batch = 0;
    std::size_t batches_per_epoch = 0;
    double running_loss = 0;
};

struct TrainResult {
    ModelParams final_params;
    /// Parameters after the epoch with the highest validation accuracy
    /// (earliest on ties); equals final_params when there is no validation set.
    ModelParams best_params;
    int best_epoch = 0;
    AdamState adam;
    std::vector<EpochStats> history;
    /// Fingerprint of the encoded training data and every epoch's visiting
    /// order. Independent of the model architecture.
    std::uint64_t pipeline_hash = 0;
};

struct TrainHooks {
    std::function<void(const EpochStats&)> on_epoch;
    std::function<void(const TrainProgress&)> on_progress;
    /// Initial embedding matrix (e.g. from load_embedding_file); random otherwise.
    std::optional<Matrix> initial_embedding;
};

/// Raised when a loss or gradient becomes non-finite; carries the parameters
/// from before the failing update.
class DivergenceDetected : public Error {
public:
    DivergenceDetected(const std::string& what, ModelParams last_good)
        : Error("DivergenceDetected", what), last_good_(std::move(last_good)) {}
    const ModelParams& last_good() const noexcept { return last_good_; }

private:
    ModelParams last_good_;
};

struct Example {
    std::vector<int> token_ids;
    int label_id = -1;  // -1: label unknown to the vocabulary
};

/// Pads/truncates to `seq_len` with the vocabulary's pad token and encodes.
/// Unknown labels become -1.
std::vector<Example> prepare_examples(const std::vector<PairedDocument>& docs, const Vocabulary& vocab,
                                      std::size_t seq_len);

/// Mini-batch training: per-example BPTT, batch-averaged gradients summed in
/// example order, global-norm clipping, Adam. Deterministic given the seed.
TrainResult train(const DatasetSplit& split, const Vocabulary& vocab, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainHooks& hooks = {});

struct ClassMetrics {
    std::size_t support = 0;
    std::size_t predicted = 0;
    std::size_t true_positive = 0;
    /// Undefined (nullopt) when the denominator is zero.
    std::optional<double> precision;
    std::optional<double> recall;
};

struct EvalReport {
    std::size_t examples = 0;  // evaluated (after any drop)
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    /// nullopt when no examples were evaluated.
    std::optional<double> accuracy;
    /// Examples whose label is absent from the vocabulary. Counted as misses
    /// unless dropped.
    std::size_t unknown_label = 0;
    std::size_t dropped = 0;
    std::vector<ClassMetrics> per_class;
    /// confusion[truth][predicted] over known labels.
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<int> predictions;
    std::vector<int> truths;  // -1 for unknown labels
};

struct EvalOptions {
    bool drop_unknown_labels = false;
    std::size_t threads = 1;
};

/// Argmax prediction (lowest index on ties) for each document.
EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const std::vector<PairedDocument>& docs,
                    const Vocabulary& vocab, const EvalOptions& opts = {});

std::size_t argmax(std::span<const double> v);

/// The k most probable labels, descending; ties by lower class index.
std::vector<std::pair<std::string, double>> predict_topk(const ModelParams& params, const ModelConfig& cfg,
                                                         const PairedDocument& doc, const Vocabulary& vocab,
                                                         std::size_t k);

/// Majority-class accuracy of `eval_docs` when always predicting the most
/// frequent label of `train_docs`.
double majority_baseline(const std::vector<PairedDocument>& train_docs, const std::vector<PairedDocument>& eval_docs);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace a2a
