// Small trained model on a learnable synthetic corpus, shared by the service,
// HTTP and acceptance tests.
#pragma once

#include <memory>

#include "alarm2action/checkpoint.hpp"
#include "alarm2action/dataset_io.hpp"
#include "alarm2action/service.hpp"
#include "alarm2action/synth.hpp"
#include "alarm2action/trainer.hpp"

namespace fixture {

struct Trained {
    a2a::ScenarioSpec spec;
    a2a::Corpus corpus;
    std::vector<a2a::PairedDocument> docs;
    a2a::SplitIndices indices;
    a2a::DatasetSplit split;
    a2a::SequencerConfig seq;
    a2a::TrainConfig train;
    a2a::TrainResult result;
    std::shared_ptr<a2a::ModelBundle> bundle;
};

struct Options {
    int faults = 4;
    int turbines = 3;
    int days = 365;
    std::uint64_t seed = 1;
    std::size_t dim = 16;
    std::size_t target_len = 10;
    int epochs = 30;
    bool bidirectional = false;
};

// Cleans the texts the way ingestion would, then pairs and pads.
inline std::vector<a2a::PairedDocument> sequence_corpus(const a2a::Corpus& c, const a2a::SequencerConfig& seq) {
    std::vector<a2a::PairedDocument> docs;
    for (const auto& [turbine, raw] : c.alarms) {
        auto alarms = raw;
        for (auto& a : alarms) a.text = a2a::clean_text(a.text);
        auto responses = c.responses.at(turbine);
        for (auto& r : responses) r.text = a2a::clean_text(r.text);
        for (auto& d : a2a::build_pairs(alarms, responses, seq).documents)
            docs.push_back(a2a::pad_or_truncate(std::move(d), seq));
    }
    return docs;
}

inline Trained train_small(const Options& o = {}) {
    Trained t;
    t.spec = a2a::learnable_spec(o.faults, o.turbines, o.days, o.seed);
    t.corpus = a2a::generate_corpus(t.spec);
    t.seq.mem_days = t.spec.mem_days;
    t.seq.target_len = o.target_len;
    t.seq.seed = o.seed;
    t.docs = sequence_corpus(t.corpus, t.seq);
    t.indices = a2a::split_indices(t.docs, t.seq);
    t.split = a2a::materialize(t.docs, t.indices);

    const auto vocab = a2a::build_vocab(t.split.train);
    a2a::ModelConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.embed_dim = o.dim;
    cfg.hidden_dim = o.dim;
    cfg.num_classes = vocab.num_labels();
    cfg.bidirectional = o.bidirectional;
    cfg.seq_len = o.target_len;
    t.train.epochs = o.epochs;
    t.train.seed = o.seed;
    t.result = a2a::train(t.split, vocab, cfg, t.train);

    t.bundle = std::make_shared<a2a::ModelBundle>();
    t.bundle->version = 1;
    t.bundle->config = cfg;
    t.bundle->params = t.result.best_params;
    t.bundle->vocab = vocab;
    t.bundle->markov = a2a::fit_transitions(a2a::alarm_sequences(t.split.train, vocab.pad_token()));
    const auto report = a2a::evaluate(t.result.best_params, cfg, t.split.validation, vocab);
    t.bundle->val_acc = report.accuracy.value_or(std::nan(""));
    return t;
}

// Writes model.ckpt, vocab.json, markov.json, dataset.jsonl and split.json.
inline void save_all(const Trained& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    a2a::Checkpoint ck;
    ck.config = t.bundle->config;
    ck.params = t.bundle->params;
    ck.vocab_hash = t.bundle->vocab.hash();
    ck.meta = {{"val_acc", t.bundle->val_acc}};
    a2a::save_model(dir / "model.ckpt", ck);
    a2a::save_vocab_json(dir / "vocab.json", t.bundle->vocab, t.bundle->config.embed_dim);
    a2a::save_markov_json(dir / "markov.json", *t.bundle->markov);
    a2a::write_dataset_jsonl(dir / "dataset.jsonl", t.docs);
    a2a::write_split_json(dir / "split.json", t.indices);
}

// The cascade of ground-truth fault `g` as service input.
inline std::vector<a2a::RawAlarm> raw_cascade(const a2a::GroundTruth& g) {
    std::vector<a2a::RawAlarm> out;
    for (const auto& a : g.cascade) out.push_back({a2a::format_timestamp(a.time), a.text});
    return out;
}

}  // namespace fixture
