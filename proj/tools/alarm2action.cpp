#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "alarm2action/checkpoint.hpp"
#include "alarm2action/dataset_io.hpp"
#include "alarm2action/errors.hpp"
#include "alarm2action/http_api.hpp"
#include "alarm2action/ingest.hpp"
#include "alarm2action/markov.hpp"
#include "alarm2action/random.hpp"
#include "alarm2action/sequencer.hpp"
#include "alarm2action/service.hpp"
#include "alarm2action/synth.hpp"
#include "alarm2action/trainer.hpp"
#include "alarm2action/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace a2a;

namespace {

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path sibling(const fs::path& file, const std::string& name) {
    return file.has_parent_path() ? file.parent_path() / name : fs::path(name);
}

fs::path best_path(const fs::path& model) {
    return sibling(model, model.stem().string() + ".best" + model.extension().string());
}

std::vector<PairedDocument> partition(const std::vector<PairedDocument>& docs, const SplitIndices& idx,
                                      const std::string& name) {
    if (name == "all") return docs;
    const std::vector<std::size_t>* which = nullptr;
    if (name == "train") which = &idx.train;
    else if (name == "validation") which = &idx.validation;
    else if (name == "test") which = &idx.test;
    else if (name == "holdout") which = &idx.holdout;
    else throw InvalidArgument("unknown partition '" + name + "'");
    std::vector<PairedDocument> out;
    for (auto i : *which) {
        if (i >= docs.size()) throw InvalidArgument("split index out of range");
        out.push_back(docs[i]);
    }
    return out;
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
    fs::path alarms, responses, out;
    long chatter_window = 60;
    int min_responses = 2;
};

void run_ingest(const IngestArgs& a) {
    CleaningConfig cfg;
    cfg.chatter_window_s = a.chatter_window;
    cfg.min_response_count = a.min_responses;
    cfg.validate();

    const auto alarm_files = find_turbine_files(a.alarms, "alarms");
    const auto response_files = find_turbine_files(a.responses, "responses");
    if (alarm_files.empty()) throw EmptyDataset("no alarms_T<k>.csv in " + a.alarms.string());
    fs::create_directories(a.out);

    json turbines = json::object();
    std::map<int, std::vector<ResponseEvent>> responses;
    std::vector<ResponseEvent> all_responses;
    std::size_t total_rows = 0, total_empty = 0, total_chatter = 0;
    for (const auto& [k, path] : alarm_files) {
        auto parsed = read_alarm_log(path, k, cfg);
        const auto kept = remove_chattering(parsed.events, cfg);
        write_event_csv(a.out / ("alarms_T" + std::to_string(k) + ".csv"), kept);
        const auto rows = parsed.events.size() + parsed.empty_dropped;
        turbines[std::to_string(k)]["alarms"] = {{"rows", rows},
                                                 {"empty_dropped", parsed.empty_dropped},
                                                 {"chatter_dropped", parsed.events.size() - kept.size()},
                                                 {"kept", kept.size()}};
        total_rows += rows;
        total_empty += parsed.empty_dropped;
        total_chatter += parsed.events.size() - kept.size();
    }
    std::size_t response_rows = 0, response_empty = 0;
    for (const auto& [k, path] : response_files) {
        auto parsed = read_response_log(path, k, cfg);
        response_rows += parsed.events.size() + parsed.empty_dropped;
        response_empty += parsed.empty_dropped;
        turbines[std::to_string(k)]["responses"] = {{"rows", parsed.events.size() + parsed.empty_dropped},
                                                    {"empty_dropped", parsed.empty_dropped}};
        all_responses.insert(all_responses.end(), parsed.events.begin(), parsed.events.end());
        responses[k] = std::move(parsed.events);
    }
    const auto filtered = filter_infrequent_responses(all_responses, cfg);
    std::size_t infrequent = 0;
    for (auto& [k, events] : responses) {
        std::vector<ResponseEvent> kept;
        for (auto& e : events) {
            if (!filtered.dropped_labels.count(e.text)) kept.push_back(e);
        }
        const auto dropped = events.size() - kept.size();
        infrequent += dropped;
        turbines[std::to_string(k)]["responses"]["infrequent_dropped"] = dropped;
        turbines[std::to_string(k)]["responses"]["kept"] = kept.size();
        write_event_csv(a.out / ("responses_T" + std::to_string(k) + ".csv"), kept);
    }
    const json report = {
        {"config", {{"chatter_window_s", cfg.chatter_window_s}, {"min_response_count", cfg.min_response_count}}},
        {"alarms", {{"rows", total_rows}, {"empty_dropped", total_empty}, {"chatter_dropped", total_chatter}}},
        {"responses",
         {{"rows", response_rows},
          {"empty_dropped", response_empty},
          {"infrequent_dropped", infrequent},
          {"dropped_labels", filtered.dropped_labels}}},
        {"turbines", turbines}};
    write_json(a.out / "cleaning_report.json", report);
    std::cout << "alarms: " << total_rows << " rows, " << total_empty << " empty, " << total_chatter
              << " chattering\n"
              << "responses: " << response_rows << " rows, " << response_empty << " empty, " << infrequent
              << " infrequent (" << filtered.dropped_labels.size() << " labels)\n";
}

// ---- sequence -------------------------------------------------------------

struct SequenceArgs {
    fs::path in, out;
    long mem = 20;
    std::size_t target_len = 75;
    std::uint64_t seed = 0;
    std::optional<int> holdout_turbine;
};

void run_sequence(const SequenceArgs& a) {
    SequencerConfig cfg;
    cfg.mem_days = a.mem;
    cfg.target_len = a.target_len;
    cfg.seed = a.seed;
    cfg.validate();
    CleaningConfig cleaning;

    const auto alarm_files = find_turbine_files(a.in, "alarms");
    const auto response_files = find_turbine_files(a.in, "responses");
    std::vector<PairedDocument> docs;
    std::size_t skipped = 0;
    for (const auto& [k, rpath] : response_files) {
        auto it = alarm_files.find(k);
        if (it == alarm_files.end()) continue;
        const auto alarms = read_alarm_log(it->second, k, cleaning).events;
        const auto responses = read_response_log(rpath, k, cleaning).events;
        auto pairs = build_pairs(alarms, responses, cfg);
        skipped += pairs.skipped_responses;
        for (auto& d : pairs.documents) docs.push_back(pad_or_truncate(std::move(d), cfg));
    }
    const auto idx = split_indices(docs, cfg, a.holdout_turbine);
    const auto out = a.out.empty() ? a.in : a.out;
    fs::create_directories(out);
    write_dataset_jsonl(out / "dataset.jsonl", docs);
    write_split_json(out / "split.json", idx);
    std::cout << docs.size() << " documents (" << skipped << " responses without alarms)\n"
              << "train " << idx.train.size() << ", validation " << idx.validation.size() << ", test "
              << idx.test.size() << ", holdout " << idx.holdout.size() << "\n";
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    fs::path data, split, out = "model.ckpt", embeddings;
    bool bidirectional = false;
    int epochs = 50;
    double lr = 0.01, clip = 1.0, markov_alpha = 0.0;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 300, hidden_dim = 300, batch = 16, threads = 1, seq_len = 0;
    bool quiet = false;
};

void run_train(const TrainArgs& a) {
    const auto docs = read_dataset_jsonl(a.data);
    const auto idx = read_split_json(a.split);
    const auto split = materialize(docs, idx);
    if (split.train.empty()) throw EmptyTrainingSet("training partition is empty");
    const std::string pad = SequencerConfig{}.pad_token;
    const auto vocab = build_vocab(split.train, pad);

    ModelConfig mcfg;
    mcfg.vocab_size = vocab.size();
    mcfg.embed_dim = a.embed_dim;
    mcfg.hidden_dim = a.hidden_dim;
    mcfg.num_classes = vocab.num_labels();
    mcfg.bidirectional = a.bidirectional;
    mcfg.seq_len = a.seq_len;
    if (mcfg.seq_len == 0) {
        for (const auto& d : docs) mcfg.seq_len = std::max(mcfg.seq_len, d.alarm_tokens.size());
    }
    mcfg.validate();

    TrainConfig tcfg;
    tcfg.epochs = a.epochs;
    tcfg.lr = a.lr;
    tcfg.clip_threshold = a.clip;
    tcfg.batch_size = a.batch;
    tcfg.seed = a.seed;
    tcfg.threads = a.threads;
    tcfg.validate();

    TrainHooks hooks;
    if (!a.embeddings.empty()) {
        Rng rng(derive_seed(a.seed, 3));
        auto load = load_embedding_file(a.embeddings, vocab, a.embed_dim, rng);
        std::cout << "embeddings: " << load.copied << " copied, " << load.averaged << " averaged, " << load.random
                  << " random\n";
        hooks.initial_embedding = std::move(load.matrix);
    }
    if (!a.quiet) {
        hooks.on_epoch = [](const EpochStats& s) {
            std::cout << "epoch " << std::setw(3) << s.epoch << "  loss " << std::fixed << std::setprecision(4)
                      << s.train_loss << "  train_acc " << s.train_acc << "  val_acc " << s.val_acc << "\n"
                      << std::defaultfloat << std::flush;
        };
    }
    const auto result = train(split, vocab, mcfg, tcfg, hooks);

    const auto final_val = result.history.empty() ? std::nan("") : result.history.back().val_acc;
    const auto best_val =
        result.best_epoch > 0 ? result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_acc : final_val;
    json meta = {{"seed", a.seed},
                 {"epochs", a.epochs},
                 {"lr", a.lr},
                 {"clip", a.clip},
                 {"batch_size", a.batch},
                 {"data", fs::absolute(a.data).string()},
                 {"split", fs::absolute(a.split).string()},
                 {"pipeline_hash", result.pipeline_hash},
                 {"best_epoch", result.best_epoch}};

    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    Checkpoint ckpt;
    ckpt.config = mcfg;
    ckpt.vocab_hash = vocab.hash();
    ckpt.params = result.final_params;
    ckpt.adam = result.adam;
    ckpt.meta = meta;
    ckpt.meta["selection"] = "final";
    ckpt.meta["val_acc"] = nullable(final_val);
    save_model(a.out, ckpt);

    ckpt.params = result.best_params;
    ckpt.adam.reset();
    ckpt.meta["selection"] = "best_validation";
    ckpt.meta["val_acc"] = nullable(best_val);
    save_model(best_path(a.out), ckpt);

    save_vocab_json(sibling(a.out, "vocab.json"), vocab, mcfg.embed_dim);
    write_history_csv(sibling(a.out, "history.csv").string(), result.history);
    const auto seqs = alarm_sequences(split.train, pad);
    if (!seqs.empty()) save_markov_json(sibling(a.out, "markov.json"), fit_transitions(seqs, a.markov_alpha));

    const auto& last = result.history.back();
    const auto& best = result.best_epoch > 0 ? result.history[static_cast<std::size_t>(result.best_epoch - 1)] : last;
    std::cout << "best epoch " << result.best_epoch << " (train_acc " << best.train_acc << ", val_acc " << best_val
              << "), final epoch " << last.epoch << " (train_acc " << last.train_acc << ", val_acc " << final_val
              << ")\nwrote " << a.out.string() << ", " << best_path(a.out).string() << "\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    fs::path model, vocab, data, split, report;
    std::string partition = "test";
    bool drop_unknown = false;
    std::size_t threads = 1;
};

void run_eval(const EvalArgs& a) {
    const auto vocab_path = a.vocab.empty() ? sibling(a.model, "vocab.json") : a.vocab;
    const auto vocab = load_vocab_json(vocab_path).first;
    const auto ckpt = load_model(a.model, vocab.hash());
    auto data = a.data;
    auto split = a.split;
    if (data.empty()) data = ckpt.meta.value("data", std::string());
    if (split.empty()) split = ckpt.meta.value("split", std::string());
    if (data.empty() || split.empty()) throw InvalidArgument("--data and --split are required");

    const auto docs = read_dataset_jsonl(data);
    const auto idx = read_split_json(split);
    const auto part = partition(docs, idx, a.partition);
    EvalOptions opts;
    opts.drop_unknown_labels = a.drop_unknown;
    opts.threads = a.threads;
    const auto report = evaluate(ckpt.params, ckpt.config, part, vocab, opts);
    const auto baseline = majority_baseline(partition(docs, idx, "train"), part);

    json per_class = json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& m = report.per_class[c];
        per_class.push_back({{"label", vocab.label(c)},
                             {"support", m.support},
                             {"predicted", m.predicted},
                             {"true_positive", m.true_positive},
                             {"precision", m.precision ? json(*m.precision) : json(nullptr)},
                             {"recall", m.recall ? json(*m.recall) : json(nullptr)}});
    }
    const json out = {{"model", a.model.string()},
                      {"partition", a.partition},
                      {"examples", report.examples},
                      {"correct", report.correct},
                      {"incorrect", report.incorrect},
                      {"accuracy", report.accuracy ? json(*report.accuracy) : json(nullptr)},
                      {"unknown_label", report.unknown_label},
                      {"dropped", report.dropped},
                      {"majority_baseline", baseline},
                      {"per_class", per_class},
                      {"confusion", report.confusion}};
    if (!a.report.empty()) write_json(a.report, out);
    std::cout << a.partition << ": " << report.correct << "/" << report.examples << " correct";
    if (report.accuracy) std::cout << ", accuracy " << *report.accuracy;
    std::cout << " (majority baseline " << baseline << ", unknown labels " << report.unknown_label << ")\n";
}

// ---- markov ---------------------------------------------------------------

struct MarkovArgs {
    fs::path data, split, model = "markov.json";
    std::string partition = "train";
    double alpha = 0.0;
    std::string state;
    std::size_t k = 3;
    std::vector<std::string> sequence;
};

std::vector<std::vector<std::string>> markov_input(const MarkovArgs& a) {
    auto docs = read_dataset_jsonl(a.data);
    if (!a.split.empty()) docs = partition(docs, read_split_json(a.split), a.partition);
    return alarm_sequences(docs, SequencerConfig{}.pad_token);
}

void run_markov_fit(const MarkovArgs& a) {
    const auto model = fit_transitions(markov_input(a), a.alpha);
    save_markov_json(a.model, model);
    std::size_t absorbing = std::count(model.absorbing.begin(), model.absorbing.end(), true);
    std::cout << model.num_states() << " states, " << absorbing << " absorbing, wrote " << a.model.string() << "\n";
}

void run_markov_next(const MarkovArgs& a) {
    const auto model = load_markov_json(a.model);
    const auto state = clean_text(a.state);
    for (const auto& [s, p] : predict_next(model, state, a.k)) std::cout << p << "\t" << s << "\n";
}

void run_markov_score(const MarkovArgs& a) {
    const auto model = load_markov_json(a.model);
    if (!a.sequence.empty()) {
        std::vector<std::string> seq;
        for (const auto& s : a.sequence) seq.push_back(clean_text(s));
        std::cout << sequence_logprob(model, seq) << "\n";
        return;
    }
    if (a.data.empty()) throw InvalidArgument("give --sequence or --data");
    std::size_t i = 0;
    for (const auto& seq : markov_input(a)) {
        double lp = -std::numeric_limits<double>::infinity();
        try {
            lp = seq.size() >= 2 ? sequence_logprob(model, seq) : 0.0;
        } catch (const UnknownState&) {
        }
        std::cout << i++ << "\t" << seq.size() << "\t" << lp << "\n";
    }
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    fs::path spec, out, write_spec;
    std::string preset;
    int faults = 8, turbines = 4, days = 365;
    std::uint64_t seed = 0;
};

void run_synth(const SynthArgs& a) {
    ScenarioSpec spec;
    if (!a.spec.empty()) spec = scenario_from_json(read_json(a.spec));
    else if (a.preset == "learnable") spec = learnable_spec(a.faults, a.turbines, a.days, a.seed);
    else if (a.preset == "ambiguous") spec = ambiguous_context_spec(a.faults / 2, a.turbines, a.days, a.seed);
    else throw InvalidArgument("give --spec or --preset learnable|ambiguous");
    const auto corpus = generate_corpus(spec);
    const auto problems = check_corpus(corpus, spec);
    write_corpus(a.out, corpus);
    if (!a.write_spec.empty()) write_json(a.write_spec, to_json(spec));
    const auto& s = corpus.stats;
    std::cout << s.faults << " faults, " << s.alarms << " alarms (" << s.floods << " floods, " << s.chatter
              << " chatter, " << s.false_alarms << " false), " << s.ambiguous << " ambiguous\n";
    for (const auto& p : problems) std::cerr << "check: " << p << "\n";
    if (!problems.empty()) throw Error("CorpusCheckFailed", std::to_string(problems.size()) + " problems");
}

// ---- serve ----------------------------------------------------------------

HttpApi* g_api = nullptr;

void on_signal(int) {
    if (g_api) g_api->stop();
}

struct ServeArgs {
    fs::path config;
    std::optional<int> port;
    std::optional<std::string> bind;
};

void run_serve(const ServeArgs& a) {
    ServiceConfig cfg = a.config.empty() ? ServiceConfig{} : load_service_config(a.config);
    apply_env_overrides(cfg);
    if (a.port) cfg.port = *a.port;
    if (a.bind) cfg.bind = *a.bind;
    auto storage = std::make_shared<SqliteStorage>(cfg.db_path);
    RecommendationService service(cfg, storage);
    HttpApi api(service);
    g_api = &api;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto status = service.status();
    std::cout << "serving on " << cfg.bind << ":" << cfg.port << " (model "
              << (status.model_loaded ? "v" + std::to_string(status.model_version) : std::string("none")) << ")\n"
              << std::flush;
    if (!api.listen(cfg.bind, cfg.port)) throw Error("IoError", "cannot listen on " + cfg.bind);
    g_api = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"alarm2action: repair-action recommendation from turbine alarm logs"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Clean alarm/response CSVs and suppress chattering");
    ingest_cmd->add_option("--alarms", ingest.alarms, "Directory with alarms_T<k>.csv")->required();
    ingest_cmd->add_option("--responses", ingest.responses, "Directory with responses_T<k>.csv")->required();
    ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
    ingest_cmd->add_option("--chatter-window", ingest.chatter_window, "Seconds")->capture_default_str();
    ingest_cmd->add_option("--min-responses", ingest.min_responses)->capture_default_str();
    ingest_cmd->callback([&] { run_ingest(ingest); });

    SequenceArgs seq;
    auto* seq_cmd = app.add_subcommand("sequence", "Pair responses with preceding alarms and split");
    seq_cmd->add_option("--in", seq.in, "Directory of cleaned CSVs")->required();
    seq_cmd->add_option("--out", seq.out, "Output directory (default: --in)");
    seq_cmd->add_option("--mem", seq.mem, "Window in days")->capture_default_str();
    seq_cmd->add_option("--target-len", seq.target_len)->capture_default_str();
    seq_cmd->add_option("--seed", seq.seed)->capture_default_str();
    seq_cmd->add_option("--holdout-turbine", seq.holdout_turbine, "Keep this turbine out of all partitions");
    seq_cmd->callback([&] { run_sequence(seq); });

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train an LSTM or BiLSTM classifier");
    train_cmd->add_option("--data", tr.data, "dataset.jsonl")->required();
    train_cmd->add_option("--split", tr.split, "split.json")->required();
    train_cmd->add_flag("--bidirectional", tr.bidirectional);
    train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
    train_cmd->add_option("--lr", tr.lr)->capture_default_str();
    train_cmd->add_option("--clip", tr.clip)->capture_default_str();
    train_cmd->add_option("--seed", tr.seed)->capture_default_str();
    train_cmd->add_option("--embed-dim", tr.embed_dim)->capture_default_str();
    train_cmd->add_option("--hidden-dim", tr.hidden_dim)->capture_default_str();
    train_cmd->add_option("--batch", tr.batch)->capture_default_str();
    train_cmd->add_option("--threads", tr.threads)->capture_default_str();
    train_cmd->add_option("--seq-len", tr.seq_len, "0 = longest document");
    train_cmd->add_option("--embeddings", tr.embeddings, "Text embedding file (token f1 ... fdim)");
    train_cmd->add_option("--markov-alpha", tr.markov_alpha)->capture_default_str();
    train_cmd->add_option("--out", tr.out)->capture_default_str();
    train_cmd->add_flag("--quiet", tr.quiet);
    train_cmd->callback([&] { run_train(tr); });

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a partition");
    eval_cmd->add_option("--model", ev.model)->required();
    eval_cmd->add_option("--vocab", ev.vocab, "Default: vocab.json next to the model");
    eval_cmd->add_option("--data", ev.data, "Default: recorded in the checkpoint");
    eval_cmd->add_option("--split", ev.split, "Default: recorded in the checkpoint");
    eval_cmd->add_option("--partition", ev.partition)
        ->check(CLI::IsMember({"train", "validation", "test", "holdout", "all"}))
        ->capture_default_str();
    eval_cmd->add_option("--report", ev.report, "Write a JSON report");
    eval_cmd->add_flag("--drop-unknown", ev.drop_unknown, "Skip examples whose label the model never saw");
    eval_cmd->add_option("--threads", ev.threads)->capture_default_str();
    eval_cmd->callback([&] { run_eval(ev); });

    MarkovArgs mk;
    auto* markov_cmd = app.add_subcommand("markov", "First-order alarm transition model");
    markov_cmd->require_subcommand(1);
    auto* fit_cmd = markov_cmd->add_subcommand("fit", "Fit transitions from dataset.jsonl");
    fit_cmd->add_option("--data", mk.data)->required();
    fit_cmd->add_option("--split", mk.split);
    fit_cmd->add_option("--partition", mk.partition)->capture_default_str();
    fit_cmd->add_option("--alpha", mk.alpha)->capture_default_str();
    fit_cmd->add_option("--out", mk.model)->capture_default_str();
    fit_cmd->callback([&] { run_markov_fit(mk); });
    auto* next_cmd = markov_cmd->add_subcommand("next", "Most likely next alarms");
    next_cmd->add_option("--model", mk.model)->capture_default_str();
    next_cmd->add_option("--state", mk.state)->required();
    next_cmd->add_option("-k", mk.k)->capture_default_str();
    next_cmd->callback([&] { run_markov_next(mk); });
    auto* score_cmd = markov_cmd->add_subcommand("score", "Log-probability of alarm sequences");
    score_cmd->add_option("--model", mk.model)->capture_default_str();
    score_cmd->add_option("--sequence", mk.sequence, "Alarm texts in order");
    score_cmd->add_option("--data", mk.data);
    score_cmd->add_option("--split", mk.split);
    score_cmd->add_option("--partition", mk.partition)->capture_default_str();
    score_cmd->callback([&] { run_markov_score(mk); });

    SynthArgs sy;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
    synth_cmd->add_option("--spec", sy.spec, "Scenario JSON");
    synth_cmd->add_option("--preset", sy.preset)->check(CLI::IsMember({"learnable", "ambiguous"}));
    synth_cmd->add_option("--faults", sy.faults)->capture_default_str();
    synth_cmd->add_option("--turbines", sy.turbines)->capture_default_str();
    synth_cmd->add_option("--days", sy.days)->capture_default_str();
    synth_cmd->add_option("--seed", sy.seed)->capture_default_str();
    synth_cmd->add_option("--write-spec", sy.write_spec, "Also write the scenario used");
    synth_cmd->add_option("--out", sy.out)->required();
    synth_cmd->callback([&] { run_synth(sy); });

    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "Run the recommendation service");
    serve_cmd->add_option("--config", sv.config, "Service JSON config");
    serve_cmd->add_option("--port", sv.port);
    serve_cmd->add_option("--bind", sv.bind);
    serve_cmd->callback([&] { run_serve(sv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const a2a::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
