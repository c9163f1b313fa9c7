#include "alarm2action/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "alarm2action/hashing.hpp"
#include "alarm2action/random.hpp"

namespace a2a {

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(lr > 0)) throw InvalidArgument("lr must be > 0");
    if (!(clip_threshold > 0)) throw InvalidArgument("clip threshold must be > 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

std::vector<Example> prepare_examples(const std::vector<PairedDocument>& docs, const Vocabulary& vocab,
                                      std::size_t seq_len) {
    SequencerConfig pad;
    pad.target_len = seq_len;
    pad.pad_token = vocab.pad_token();
    std::vector<Example> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        auto e = encode_document_lenient(pad_or_truncate(d, pad), vocab);
        out.push_back({std::move(e.token_ids), e.label_id});
    }
    return out;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

namespace {

/// Per-example gradient buffer that knows which embedding rows it touched,
/// so resetting and reducing skip the untouched rows.
struct Workspace {
    Gradients grads;
    std::vector<int> touched;  // unique embedding rows
    double loss = 0;
    bool correct = false;

    void reset() {
        for (int r : touched) {
            auto row = grads.embedding.row(static_cast<std::size_t>(r));
            std::fill(row.begin(), row.end(), 0.0);
        }
        touched.clear();
        for (auto& d : grads.lstm) {
            std::fill(d.W.data.begin(), d.W.data.end(), 0.0);
            std::fill(d.U.data.begin(), d.U.data.end(), 0.0);
            std::fill(d.b.begin(), d.b.end(), 0.0);
        }
        std::fill(grads.dense_w.data.begin(), grads.dense_w.data.end(), 0.0);
        std::fill(grads.dense_b.begin(), grads.dense_b.end(), 0.0);
    }
};

void run_example(const ModelParams& params, const ModelConfig& cfg, const Example& ex, Workspace& ws) {
    auto fwd = forward(params, cfg, ex.token_ids);
    ws.loss = loss(fwd.probs, ex.label_id);
    ws.correct = static_cast<int>(argmax(fwd.probs)) == ex.label_id;
    accumulate_backward(params, cfg, fwd.cache, ex.label_id, ws.grads);
    std::set<int> rows(ex.token_ids.begin(), ex.token_ids.end());
    rows.erase(Vocabulary::kPad);
    ws.touched.assign(rows.begin(), rows.end());
}

void add_into(Gradients& total, const Workspace& ws) {
    for (int r : ws.touched) {
        auto dst = total.embedding.row(static_cast<std::size_t>(r));
        auto src = ws.grads.embedding.row(static_cast<std::size_t>(r));
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    auto add = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    };
    for (std::size_t d = 0; d < total.lstm.size(); ++d) {
        add(total.lstm[d].W.data, ws.grads.lstm[d].W.data);
        add(total.lstm[d].U.data, ws.grads.lstm[d].U.data);
        add(total.lstm[d].b, ws.grads.lstm[d].b);
    }
    add(total.dense_w.data, ws.grads.dense_w.data);
    add(total.dense_b, ws.grads.dense_b);
}

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double accuracy_of(const ModelParams& params, const ModelConfig& cfg, const std::vector<Example>& examples,
                   std::size_t threads) {
    if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<char> hit(examples.size(), 0);
    parallel_for(examples.size(), threads, [&](std::size_t i) {
        auto fwd = forward(params, cfg, examples[i].token_ids);
        hit[i] = static_cast<int>(argmax(fwd.probs)) == examples[i].label_id;
    });
    return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train(const DatasetSplit& split, const Vocabulary& vocab, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainHooks& hooks) {
    tcfg.validate();
    mcfg.validate();
    if (split.train.empty()) throw EmptyTrainingSet("training partition is empty");
    if (mcfg.vocab_size != vocab.size()) throw ShapeMismatch("vocab_size does not match vocabulary");
    if (mcfg.num_classes != vocab.num_labels()) throw ShapeMismatch("num_classes does not match label count");

    const auto train_examples = prepare_examples(split.train, vocab, mcfg.seq_len);
    for (std::size_t i = 0; i < train_examples.size(); ++i) {
        if (train_examples[i].label_id < 0) throw UnknownLabel(split.train[i].label);
    }
    // Validation examples with labels unseen in training can never be right;
    // they stay in the denominator.
    const auto val_examples = prepare_examples(split.validation, vocab, mcfg.seq_len);

    Rng init_rng(derive_seed(tcfg.seed, 1));
    Rng order_rng(derive_seed(tcfg.seed, 2));

    TrainResult result;
    ModelParams params = init_params(mcfg, init_rng);
    if (hooks.initial_embedding) {
        const Matrix& e = *hooks.initial_embedding;
        if (e.rows != mcfg.vocab_size || e.cols != mcfg.embed_dim) throw ShapeMismatch("initial embedding shape");
        params.embedding = e;
        std::fill(params.embedding.row(0).begin(), params.embedding.row(0).end(), 0.0);
    }
    AdamState adam = make_adam_state(mcfg);

    Fnv1a pipeline;
    pipeline.update_u64(train_examples.size());
    for (const auto& ex : train_examples) {
        for (int id : ex.token_ids) pipeline.update_i64(id);
        pipeline.update_i64(ex.label_id);
    }

    const std::size_t n = train_examples.size();
    const std::size_t batch = std::min(tcfg.batch_size, n);
    const std::size_t batches = (n + batch - 1) / batch;
    const std::size_t parallel = std::min(tcfg.threads, batch);
    std::vector<Workspace> workspaces(parallel > 1 ? batch : 1);
    for (auto& ws : workspaces) ws.grads = zeros_like(mcfg);
    Gradients total = zeros_like(mcfg);

    double best_val = -1;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        shuffle(order, order_rng);
        for (auto i : order) pipeline.update_u64(i);

        double epoch_loss = 0;
        std::size_t epoch_correct = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t begin = b * batch;
            const std::size_t end = std::min(n, begin + batch);
            const std::size_t count = end - begin;
            for (auto& d : total.lstm) {
                std::fill(d.W.data.begin(), d.W.data.end(), 0.0);
                std::fill(d.U.data.begin(), d.U.data.end(), 0.0);
                std::fill(d.b.begin(), d.b.end(), 0.0);
            }
            std::fill(total.embedding.data.begin(), total.embedding.data.end(), 0.0);
            std::fill(total.dense_w.data.begin(), total.dense_w.data.end(), 0.0);
            std::fill(total.dense_b.begin(), total.dense_b.end(), 0.0);

            double batch_loss = 0;
            auto absorb = [&](Workspace& ws) {
                batch_loss += ws.loss;
                epoch_correct += ws.correct ? 1 : 0;
                add_into(total, ws);
                ws.reset();
            };
            if (workspaces.size() == 1) {
                for (std::size_t i = begin; i < end; ++i) {
                    run_example(params, mcfg, train_examples[order[i]], workspaces[0]);
                    absorb(workspaces[0]);
                }
            } else {
                parallel_for(count, parallel, [&](std::size_t j) {
                    run_example(params, mcfg, train_examples[order[begin + j]], workspaces[j]);
                });
                for (std::size_t j = 0; j < count; ++j) absorb(workspaces[j]);
            }

            if (!std::isfinite(batch_loss)) {
                throw DivergenceDetected("non-finite loss at epoch " + std::to_string(epoch), params);
            }
            const double scale = 1.0 / static_cast<double>(count);
            for_each_tensor(total, [&](const std::string&, std::span<double> t) {
                for (auto& x : t) x *= scale;
            });
            clip_gradients(total, tcfg.clip_threshold);
            ModelParams before = params;
            try {
                adam_step(params, total, adam, tcfg.lr);
            } catch (const NonFiniteGradient& e) {
                throw DivergenceDetected(e.what(), std::move(before));
            }
            if (!all_finite(params)) throw DivergenceDetected("non-finite parameters", std::move(before));

            epoch_loss += batch_loss;
            if (hooks.on_progress && tcfg.progress_every > 0 && (b + 1) % tcfg.progress_every == 0) {
                hooks.on_progress({epoch, b + 1, batches, batch_loss / static_cast<double>(count)});
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(n);
        stats.train_acc = static_cast<double>(epoch_correct) / static_cast<double>(n);
        stats.val_acc = accuracy_of(params, mcfg, val_examples, tcfg.threads);
        result.history.push_back(stats);
        if (hooks.on_epoch) hooks.on_epoch(stats);

        if (!val_examples.empty() && stats.val_acc > best_val) {
            best_val = stats.val_acc;
            result.best_params = params;
            result.best_epoch = epoch;
        }
    }

    if (val_examples.empty()) {
        result.best_params = params;
        result.best_epoch = tcfg.epochs;
    }
    result.final_params = std::move(params);
    result.adam = std::move(adam);
    result.pipeline_hash = pipeline.digest();
    return result;
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const std::vector<PairedDocument>& docs,
                    const Vocabulary& vocab, const EvalOptions& opts) {
    auto examples = prepare_examples(docs, vocab, cfg.seq_len);
    EvalReport r;
    const std::size_t C = cfg.num_classes;
    r.confusion.assign(C, std::vector<std::size_t>(C, 0));
    r.per_class.assign(C, {});

    std::vector<int> preds(examples.size(), -1);
    parallel_for(examples.size(), opts.threads, [&](std::size_t i) {
        preds[i] = static_cast<int>(argmax(forward(params, cfg, examples[i].token_ids).probs));
    });

    for (std::size_t i = 0; i < examples.size(); ++i) {
        const int truth = examples[i].label_id;
        if (truth < 0) {
            ++r.unknown_label;
            if (opts.drop_unknown_labels) {
                ++r.dropped;
                continue;
            }
        }
        r.predictions.push_back(preds[i]);
        r.truths.push_back(truth);
        ++r.examples;
        ++r.per_class[static_cast<std::size_t>(preds[i])].predicted;
        if (truth < 0) {
            ++r.incorrect;
            continue;
        }
        ++r.per_class[static_cast<std::size_t>(truth)].support;
        ++r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(preds[i])];
        if (preds[i] == truth) {
            ++r.correct;
            ++r.per_class[static_cast<std::size_t>(truth)].true_positive;
        } else {
            ++r.incorrect;
        }
    }
    if (r.examples > 0) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.examples);
    for (auto& m : r.per_class) {
        if (m.predicted > 0) m.precision = static_cast<double>(m.true_positive) / static_cast<double>(m.predicted);
        if (m.support > 0) m.recall = static_cast<double>(m.true_positive) / static_cast<double>(m.support);
    }
    return r;
}

std::vector<std::pair<std::string, double>> predict_topk(const ModelParams& params, const ModelConfig& cfg,
                                                         const PairedDocument& doc, const Vocabulary& vocab,
                                                         std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    SequencerConfig pad;
    pad.target_len = cfg.seq_len;
    pad.pad_token = vocab.pad_token();
    const auto ids = encode_tokens(pad_or_truncate(doc, pad).alarm_tokens, vocab);
    const auto probs = forward(params, cfg, ids).probs;
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    order.resize(std::min(k, order.size()));
    std::vector<std::pair<std::string, double>> out;
    for (auto c : order) out.emplace_back(vocab.label(c), probs[c]);
    return out;
}

double majority_baseline(const std::vector<PairedDocument>& train_docs, const std::vector<PairedDocument>& eval_docs) {
    if (train_docs.empty() || eval_docs.empty()) return 0.0;
    std::map<std::string, std::size_t> counts;
    for (const auto& d : train_docs) ++counts[d.label];
    const auto majority =
        std::max_element(counts.begin(), counts.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    const auto hits = std::count_if(eval_docs.begin(), eval_docs.end(),
                                    [&](const PairedDocument& d) { return d.label == majority; });
    return static_cast<double>(hits) / static_cast<double>(eval_docs.size());
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << "epoch,train_loss,train_acc,val_acc\n";
    out.precision(10);
    for (const auto& h : history) {
        out << h.epoch << ',' << h.train_loss << ',' << h.train_acc << ',';
        if (std::isnan(h.val_acc)) out << "nan";
        else out << h.val_acc;
        out << '\n';
    }
}

}  // namespace a2a
